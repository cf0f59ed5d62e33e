"""Game of Hidden Rules: engine, rule language, server, learner, analysis."""

__version__ = "0.1.0"
