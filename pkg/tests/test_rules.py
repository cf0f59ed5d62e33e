import pytest
from hypothesis import given
from hypothesis import strategies as st

from gohr.errors import LexError, ParseError, ValidationError
from gohr.rules import (
    Atom,
    BucketArith,
    BucketList,
    BucketLit,
    BucketVar,
    DEFAULT_FEATURES,
    DuplicateValueWarning,
    FeatureSet,
    Nearby,
    Remotest,
    RuleLine,
    RuleSpec,
    format_rule,
    parse_rule,
    tokenize,
)

COLOR_MATCH = ("(*, star, *, *, 0) (*, triangle, *, *, 1) "
               "(*, square, *, *, 2) (*, circle, *, *, 3)")
CLOCKWISE = "(1, *, *, *, [0,1,2,3])\n(*, *, *, *, (p + 1))"
CLOCKWISE_BARE = "(1, *, *, *, [0,1,2,3])\n(*, *, *, *, p+1)"
B23_THEN_B01 = "(1, *, *, *, [2,3])\n(1, *, *, *, [0,1])"
B3_THEN_B1 = "(1, *, *, *, 3)\n(1, *, *, *, 1)"
MIXED_BUCKETS = "(*, [star, triangle], *, *, 0) (*, square, *, *, 1) (*, circle, *, *, [2,3])"
ALTERNATING = ("1 (*, star, *, *, 0) (*, square, *, *, 1) (*, circle, *, *, 2) (*, triangle, *, *, 3)\n"
               "1 (*, *, red, *, 0) (*, *, blue, *, 1) (*, *, black, *, 2) (*, *, yellow, *, 3)")
TOP_BOTTOM = "(1, *, *, *, [0,1])\n(1, *, *, *, [2,3])"
RED_THEN_BLUE = "(*, *, red, *, 1)\n(*, *, blue, *, 2)"

ALL_SAMPLE_RULES = [COLOR_MATCH, CLOCKWISE, CLOCKWISE_BARE, B23_THEN_B01,
                    B3_THEN_B1, MIXED_BUCKETS, ALTERNATING, TOP_BOTTOM,
                    RED_THEN_BLUE]


class TestTokenize:
    def test_atom_tokens(self):
        kinds = [t.kind for t in tokenize("(*, square, *, *, 1)")]
        assert kinds == ["LPAREN", "STAR", "COMMA", "IDENT", "COMMA", "STAR",
                         "COMMA", "STAR", "COMMA", "INT", "RPAREN"]

    def test_arith_tokens(self):
        tokens = tokenize("(*, *, *, *, p+1)")
        values = [(t.kind, t.value) for t in tokens if t.kind in ("IDENT", "PLUS", "INT")]
        assert values == [("IDENT", "p"), ("PLUS", "+"), ("INT", 1)]

    def test_illegal_character(self):
        with pytest.raises(LexError) as exc:
            tokenize("@")
        assert exc.value.line == 1 and exc.value.column == 1

    def test_illegal_character_position(self):
        with pytest.raises(LexError) as exc:
            tokenize("(*, *, *, *, 1)\n  !")
        assert exc.value.line == 2 and exc.value.column == 3

    def test_comments_and_blank_lines_skipped(self):
        tokens = tokenize("# header\n\n(*, *, *, *, 0)  # tail\n")
        assert [t.kind for t in tokens][0] == "LPAREN"
        assert all(t.kind != "NEWLINE" for t in tokens)

    def test_newline_separates_lines(self):
        kinds = [t.kind for t in tokenize("1 (*, *, *, *, 0)\n(*, *, *, *, 1)")]
        assert kinds.count("NEWLINE") == 1

    def test_case_folding(self):
        tok = [t for t in tokenize("STAR") if t.kind == "IDENT"][0]
        assert tok.value == "star"


class TestParse:
    def test_single_line_three_atoms(self):
        spec = parse_rule(MIXED_BUCKETS)
        assert len(spec.lines) == 1
        line = spec.lines[0]
        assert line.count is None
        assert len(line.atoms) == 3
        assert all(a.count is None for a in line.atoms)
        assert line.atoms[0].shapes == ("star", "triangle")
        assert line.atoms[2].buckets == BucketList((BucketLit(2), BucketLit(3)))

    def test_line_counts(self):
        spec = parse_rule(ALTERNATING)
        assert len(spec.lines) == 2
        assert all(line.count == 1 for line in spec.lines)
        assert all(len(line.atoms) == 4 for line in spec.lines)

    def test_wildcards(self):
        spec = parse_rule("(*, *, *, *, 0)")
        atom = spec.lines[0].atoms[0]
        assert atom.count is None and atom.shapes is None
        assert atom.colors is None and atom.positions is None

    def test_parenthesized_bucket_expression(self):
        spec = parse_rule(CLOCKWISE)
        assert spec.lines[1].atoms[0].buckets == BucketArith("p", 1)

    def test_negative_offset(self):
        spec = parse_rule("(*, *, *, *, ps-2)")
        assert spec.lines[0].atoms[0].buckets == BucketArith("ps", -2)

    def test_bare_register(self):
        spec = parse_rule("(*, *, *, *, pc)")
        assert spec.lines[0].atoms[0].buckets == BucketVar("pc")

    def test_nearby_remotest(self):
        spec = parse_rule("(*, *, *, *, nearby)\n(*, *, *, *, remotest)")
        assert spec.lines[0].atoms[0].buckets == Nearby()
        assert spec.lines[1].atoms[0].buckets == Remotest()

    def test_positions(self):
        spec = parse_rule("(*, *, *, [1,7,36], 0)")
        assert spec.lines[0].atoms[0].positions == (1, 7, 36)

    def test_unknown_shape(self):
        with pytest.raises(ValidationError, match="unknown shape"):
            parse_rule("(*, hexagon, *, *, 0)")

    def test_unknown_color(self):
        with pytest.raises(ValidationError, match="unknown color"):
            parse_rule("(*, *, green, *, 0)")

    def test_bucket_out_of_range(self):
        with pytest.raises(ValidationError, match="bucket literal"):
            parse_rule("(*, *, *, *, 4)")

    def test_position_out_of_range(self):
        with pytest.raises(ValidationError, match="cell label"):
            parse_rule("(*, *, *, 37, 0)")

    def test_zero_count_rejected(self):
        with pytest.raises(ValidationError, match="count"):
            parse_rule("(0, *, *, *, 0)")

    def test_zero_line_count_rejected(self):
        with pytest.raises(ValidationError, match="count"):
            parse_rule("0 (*, *, *, *, 0)")

    def test_empty_bucket_list_rejected(self):
        with pytest.raises(ValidationError, match="empty"):
            parse_rule("(*, *, *, *, [])")

    def test_wrong_arity(self):
        with pytest.raises(ParseError):
            parse_rule("(1)")

    def test_missing_close_paren(self):
        with pytest.raises(ParseError):
            parse_rule("(*, *, *, *, 0")

    def test_star_not_allowed_in_buckets(self):
        with pytest.raises(ParseError):
            parse_rule("(*, *, *, *, *)")

    def test_empty_text(self):
        with pytest.raises(ParseError):
            parse_rule("   \n# only a comment\n")

    def test_shape_name_in_bucket_field(self):
        with pytest.raises(ValidationError, match="bucket expression"):
            parse_rule("(*, *, *, *, star)")

    def test_duplicates_deduplicated_with_warning(self):
        with pytest.warns(DuplicateValueWarning):
            spec = parse_rule("(*, [star, star], *, *, 0)")
        assert spec.lines[0].atoms[0].shapes == ("star",)

    def test_case_insensitive(self):
        spec = parse_rule("(*, STAR, Red, *, 0)")
        atom = spec.lines[0].atoms[0]
        assert atom.shapes == ("star",) and atom.colors == ("red",)

    def test_arbitrary_bytes_never_crash(self):
        for text in ["\x00\x01", "(((", "]][[", "1 2 3", "(*,,,,)", "()",
                     "(*, *, *, *, p+)", "- (*, *, *, *, 0)"]:
            with pytest.raises((LexError, ParseError, ValidationError)):
                parse_rule(text)

    @pytest.mark.parametrize("text", ALL_SAMPLE_RULES)
    def test_all_sample_rules_parse_and_roundtrip(self, text):
        spec = parse_rule(text)
        again = parse_rule(format_rule(spec))
        assert again == spec


class TestFormat:
    def test_alternation_canonical_form(self):
        spec = parse_rule(B3_THEN_B1)
        assert format_rule(spec) == "(1, *, *, *, 3)\n(1, *, *, *, 1)"

    def test_single_element_bucket_list_not_collapsed(self):
        spec = parse_rule("(*, *, *, *, [0,1,2,3])")
        assert format_rule(spec) == "(*, *, *, *, [0,1,2,3])"
        one = RuleSpec((RuleLine(None, (Atom(None, None, None, None,
                                             BucketList((BucketLit(2),))),)),))
        assert format_rule(one) == "(*, *, *, *, [2])"
        assert parse_rule(format_rule(one)) == one

    def test_clockwise_two_line_form(self):
        spec = parse_rule(CLOCKWISE)
        assert format_rule(spec).count("\n") == 1
        assert parse_rule(format_rule(spec)) == spec


# --- round-trip fuzzing -----------------------------------------------------

def bucket_exprs(depth=0):
    leaf = st.one_of(
        st.integers(0, 3).map(BucketLit),
        st.sampled_from(["p", "pc", "ps"]).map(BucketVar),
        st.tuples(st.sampled_from(["p", "pc", "ps"]),
                  st.integers(-9, 9)).map(lambda t: BucketArith(*t)),
        st.just(Nearby()),
        st.just(Remotest()),
    )
    if depth > 0:
        return leaf
    lists = st.lists(bucket_exprs(1), min_size=1, max_size=4,
                     unique_by=repr).map(lambda xs: BucketList(tuple(xs)))
    return st.one_of(leaf, lists)


def _subset(values):
    return st.one_of(
        st.none(),
        st.lists(st.sampled_from(values), min_size=1,
                 max_size=len(values), unique=True).map(tuple),
    )


atoms = st.builds(
    Atom,
    count=st.one_of(st.none(), st.integers(1, 9)),
    shapes=_subset(DEFAULT_FEATURES.shapes),
    colors=_subset(DEFAULT_FEATURES.colors),
    positions=st.one_of(
        st.none(),
        st.lists(st.integers(1, 36), min_size=1, max_size=6,
                 unique=True).map(tuple)),
    buckets=bucket_exprs(),
)

rule_specs = st.builds(
    RuleSpec,
    lines=st.lists(
        st.builds(RuleLine,
                  count=st.one_of(st.none(), st.integers(1, 9)),
                  atoms=st.lists(atoms, min_size=1, max_size=4).map(tuple)),
        min_size=1, max_size=4).map(tuple),
)


@given(rule_specs)
def test_roundtrip_fuzz(spec):
    assert parse_rule(format_rule(spec)) == spec


# --- feature sets -------------------------------------------------------------

class TestFeatureSet:
    def test_defaults(self):
        assert DEFAULT_FEATURES.shapes == ("circle", "triangle", "square", "star")
        assert DEFAULT_FEATURES.colors == ("red", "blue", "black", "yellow")

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            FeatureSet(shapes=(), colors=("red",))

    def test_rejects_duplicates(self):
        with pytest.raises(ValidationError):
            FeatureSet(shapes=("star", "star"), colors=("red",))

    def test_rejects_reserved_words(self):
        with pytest.raises(ValidationError):
            FeatureSet(shapes=("nearby",), colors=("red",))

    def test_rejects_uppercase(self):
        with pytest.raises(ValidationError):
            FeatureSet(shapes=("Star",), colors=("red",))

    def test_custom_vocabulary(self):
        fs = FeatureSet(shapes=("dot", "cross"), colors=("cyan", "magenta"))
        spec = parse_rule("(*, dot, cyan, *, 0)", fs)
        assert spec.lines[0].atoms[0].shapes == ("dot",)
        with pytest.raises(ValidationError):
            parse_rule("(*, star, *, *, 0)", fs)
