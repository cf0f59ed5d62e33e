import io
import socket
import threading
from pathlib import Path

import pytest

from gohr.boards import GenParams
from gohr.cgs import GameTCPServer, Session, SessionConfig, serve
from gohr.engine import Board, Piece
from gohr.errors import ConfigError
from gohr.rules import DEFAULT_FEATURES, parse_rule

DATA = Path(__file__).parent / "data"
COLOR_MATCH = parse_rule("(*, star, *, *, 0) (*, triangle, *, *, 1) "
                         "(*, square, *, *, 2) (*, circle, *, *, 3)")


def make_config(**kwargs):
    defaults = dict(rule=COLOR_MATCH, rule_name="color_match",
                    gen_params=GenParams(9, 9, 4, 4, 4, 4), seed=12345,
                    horizon=100)
    defaults.update(kwargs)
    return SessionConfig(**defaults)


class TestSessionProtocol:
    def test_new_returns_nine_piece_board(self):
        session = Session(make_config(), 0)
        response, done = session.handle_line("NEW")
        assert not done
        assert response.startswith("status=ok episode=0 move_count=0 "
                                   "episode_over=0 board=")
        assert response.count(":") == 18  # 9 pieces x 2 colons

    def test_legal_move_removes_piece(self):
        session = Session(make_config(boards=[
            Board([Piece(1, DEFAULT_FEATURES.shape_index("star"), 0)])],
            gen_params=None), 0)
        session.handle_line("NEW")
        response, _ = session.handle_line("MOVE 1 1 0")
        assert "verdict=0" in response and "reward=0" in response
        assert response.endswith("board=")
        assert "episode_over=1" in response

    def test_illegal_move_keeps_board(self):
        session = Session(make_config(boards=[
            Board([Piece(1, DEFAULT_FEATURES.shape_index("star"), 0)])],
            gen_params=None), 0)
        session.handle_line("NEW")
        response, _ = session.handle_line("MOVE 1 1 2")
        assert "verdict=1" in response and "reward=-1" in response
        assert "1:star:red" in response

    def test_bucket_out_of_range_state_unchanged(self):
        session = Session(make_config(), 0)
        before, _ = session.handle_line("NEW")
        response, done = session.handle_line("MOVE 1 1 7")
        assert response == "status=error error=bucket_out_of_range"
        assert not done
        after, _ = session.handle_line("DISPLAY")
        assert after == before

    def test_malformed_requests_never_end_session(self):
        session = Session(make_config(), 0)
        session.handle_line("NEW")
        for bad in ["", "MOVE", "MOVE 1", "MOVE 1 2", "MOVE x y z",
                    "NOPE", "NEW extra", "MOVE 1 2 3 4"]:
            response, done = session.handle_line(bad)
            assert response.startswith("status=error")
            assert not done
        response, _ = session.handle_line("DISPLAY")
        assert response.startswith("status=ok")

    def test_move_before_new_is_error(self):
        session = Session(make_config(), 0)
        response, _ = session.handle_line("MOVE 1 1 0")
        assert response == "status=error error=no_episode"
        response, _ = session.handle_line("DISPLAY")
        assert response == "status=error error=no_episode"

    def test_max_episodes_enforced(self):
        session = Session(make_config(max_episodes=1), 0)
        response, _ = session.handle_line("NEW")
        assert response.startswith("status=ok")
        response, _ = session.handle_line("NEW")
        assert response == "status=error error=no_more_episodes"

    def test_board_list_exhaustion(self):
        session = Session(make_config(boards=[
            Board([Piece(1, 0, 0)])], gen_params=None), 0)
        session.handle_line("NEW")
        response, _ = session.handle_line("NEW")
        assert response == "status=error error=no_more_episodes"

    def test_horizon_ends_episode(self):
        session = Session(make_config(horizon=2, boards=[
            Board([Piece(1, 0, 0), Piece(2, 1, 1)])], gen_params=None), 0)
        session.handle_line("NEW")
        session.handle_line("MOVE 6 6 0")  # empty cell: reject
        response, _ = session.handle_line("MOVE 6 6 0")
        assert "episode_over=1" in response
        # beyond the horizon: no-op with reward 0
        response, _ = session.handle_line("MOVE 1 1 3")
        assert "verdict=1 reward=0" in response
        assert "move_count=2" in response

    def test_exit_ends_session(self):
        session = Session(make_config(), 0)
        response, done = session.handle_line("EXIT")
        assert response == "status=ok"
        assert done

    def test_requests_case_insensitive_commands(self):
        session = Session(make_config(), 0)
        response, _ = session.handle_line("new")
        assert response.startswith("status=ok")

    def test_exactly_one_board_source_required(self):
        with pytest.raises(ConfigError):
            SessionConfig(rule=COLOR_MATCH)
        with pytest.raises(ConfigError):
            SessionConfig(rule=COLOR_MATCH, gen_params=GenParams(),
                          boards=[Board([Piece(1, 0, 0)])])


class TestGoldenSession:
    def run_script(self):
        config = make_config(max_episodes=2)
        rfile = io.StringIO((DATA / "golden_session_script.txt").read_text())
        wfile = io.StringIO()
        serve(config, rfile, wfile, session_index=0)
        return wfile.getvalue()

    def test_byte_identical_across_runs(self):
        golden = (DATA / "golden_session_output.txt").read_text()
        assert self.run_script() == golden
        assert self.run_script() == golden

    def test_replayability_request_log_determines_response_log(self):
        assert self.run_script() == self.run_script()


class TestTranscripts:
    def test_rows_flushed_per_move(self, tmp_path):
        config = make_config(transcript_dir=str(tmp_path), boards=[
            Board([Piece(1, DEFAULT_FEATURES.shape_index("star"), 0)])],
            gen_params=None)
        session = Session(config, 0)
        session.handle_line("NEW")
        session.handle_line("MOVE 1 1 2")
        # read without closing: simulates a dropped connection
        content = (tmp_path / "session_000.csv").read_text()
        assert content.splitlines()[0] == \
            "episode,move_index,row,col,bucket,verdict,reason,reward"
        assert content.splitlines()[1] == "0,1,1,1,2,1,NO_MATCHING_ATOM,-1"
        session.handle_line("MOVE 1 1 0")
        content = (tmp_path / "session_000.csv").read_text()
        assert content.splitlines()[2] == "0,2,1,1,0,0,ACCEPTED,0"
        session.close()


class TestTCPServer:
    def test_concurrent_sessions_are_isolated(self, tmp_path):
        config = make_config(transcript_dir=str(tmp_path))
        server = GameTCPServer(("127.0.0.1", 0), config)
        host, port = server.server_address
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            def open_client():
                sock = socket.create_connection((host, port), timeout=5)
                return sock, sock.makefile("rw", encoding="utf-8")

            sock_a, file_a = open_client()
            sock_b, file_b = open_client()

            def request(fh, line):
                fh.write(line + "\n")
                fh.flush()
                return fh.readline().strip()

            resp_a = request(file_a, "NEW")
            resp_b = request(file_b, "NEW")
            assert resp_a.startswith("status=ok")
            assert resp_b.startswith("status=ok")
            # per-session RNG streams: different boards
            assert resp_a.split("board=")[1] != resp_b.split("board=")[1]

            # interleaved moves do not interfere
            before_b = request(file_b, "DISPLAY")
            request(file_a, "MOVE 1 1 0")
            after_b = request(file_b, "DISPLAY")
            assert before_b == after_b

            assert request(file_a, "EXIT") == "status=ok"
            assert request(file_b, "EXIT") == "status=ok"
            sock_a.close()
            sock_b.close()
        finally:
            server.shutdown()
            server.server_close()

    def test_dropped_connection_preserves_transcript(self, tmp_path):
        config = make_config(transcript_dir=str(tmp_path))
        server = GameTCPServer(("127.0.0.1", 0), config)
        host, port = server.server_address
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            sock = socket.create_connection((host, port), timeout=5)
            fh = sock.makefile("rw", encoding="utf-8")
            fh.write("NEW\n")
            fh.flush()
            fh.readline()
            fh.write("MOVE 1 1 0\n")
            fh.flush()
            fh.readline()
            sock.close()  # drop without EXIT
            import time
            deadline = time.time() + 5
            path = tmp_path / "session_000.csv"
            while time.time() < deadline:
                if path.exists() and len(path.read_text().splitlines()) >= 2:
                    break
                time.sleep(0.05)
            assert len(path.read_text().splitlines()) == 2
        finally:
            server.shutdown()
            server.server_close()
