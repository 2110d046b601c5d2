"""Proposal-to-commit matching, thresholds, consumption, external heuristic."""
import random

import pytest

from traceweave.attribution import (
    AttributionConfig,
    attribute_commits,
    external_source_flag,
    implied_wpm,
    match_score,
    normalize_lines,
)
from traceweave.models import FileDiff, MatchClass, Origin, TextEditGroup

from conftest import added_diff, make_commit, make_request, make_session, random_corpus


def teg(path: str, lines: list[str], request_id: str = "r1") -> TextEditGroup:
    return TextEditGroup(file_path=path, proposed_lines=lines, request_id=request_id)


class TestNormalizeLines:
    def test_trim_collapse_drop(self):
        assert normalize_lines(["  x = 1  ", "", "\ty =\t2"]) == ["x = 1", "y = 2"]

    def test_empty_input(self):
        assert normalize_lines([]) == []

    def test_already_normalized(self):
        assert normalize_lines(["a"]) == ["a"]

    def test_whitespace_only_lines_dropped(self):
        assert normalize_lines(["   ", "\t", " a "]) == ["a"]


class TestMatchScore:
    def test_identical_lines(self):
        lines = ["def f():", "    return 1"]
        assert match_score(teg("a.py", lines), added_diff("a.py", lines)) == 1.0

    def test_half_kept_half_rewritten(self):
        proposed = ["l1", "l2", "l3", "l4"]
        committed = ["l1", "changed", "l3", "also changed"]
        assert match_score(teg("a.py", proposed), added_diff("a.py", committed)) == 0.5

    def test_indentation_difference_ignored(self):
        proposed = ["def f():", "return 1"]
        committed = ["    def f():", "        return 1"]
        assert match_score(teg("a.py", proposed), added_diff("a.py", committed)) == 1.0

    def test_whitespace_only_teg_undefined(self):
        assert match_score(teg("a.py", ["   ", ""]), added_diff("a.py", ["x"])) is None

    def test_multiset_counts_duplicates_once_each(self):
        proposed = ["dup", "dup"]
        committed = ["dup"]
        assert match_score(teg("a.py", proposed), added_diff("a.py", committed)) == 0.5

    def test_path_mismatch_rejected(self):
        with pytest.raises(ValueError):
            match_score(teg("a.py", ["x"]), added_diff("b.py", ["x"]))

    def test_score_bounds(self):
        rng = random.Random(3)
        for _ in range(200):
            proposed = [f"p{rng.randint(0, 5)}" for _ in range(rng.randint(1, 6))]
            committed = [f"p{rng.randint(0, 8)}" for _ in range(rng.randint(0, 8))]
            score = match_score(teg("a.py", proposed), added_diff("a.py", committed))
            assert 0.0 <= score <= 1.0


class TestAttributeCommits:
    def test_single_full_match(self):
        lines = ["a = 1", "b = 2"]
        sessions = [make_session("s1", [make_request("r1", 0, tegs=[("views.py", lines)])])]
        commits = [make_commit("c1", 60_000, [added_diff("views.py", lines)])]
        [attribution] = attribute_commits(commits, sessions)
        assert attribution.origin == Origin.COPILOT
        assert attribution.match_class == MatchClass.FULL
        assert attribution.match_score == 1.0
        assert attribution.matched_request_id == "r1"
        assert attribution.time_delta_s == 60.0

    def test_commit_outside_window_is_human(self):
        lines = ["a = 1"]
        sessions = [make_session("s1", [make_request("r1", 0, tegs=[("views.py", lines)])])]
        commits = [make_commit("c1", 400_000, [added_diff("views.py", lines)])]
        [attribution] = attribute_commits(commits, sessions)
        assert attribution.origin == Origin.HUMAN
        assert attribution.match_class == MatchClass.UNMATCHED
        assert attribution.matched_request_id is None
        assert attribution.time_delta_s is None

    def test_teg_consumed_by_earliest_commit(self):
        lines = ["a = 1"]
        sessions = [make_session("s1", [make_request("r1", 0, tegs=[("views.py", lines)])])]
        commits = [
            make_commit("c1", 30_000, [added_diff("views.py", lines)]),
            make_commit("c2", 60_000, [added_diff("views.py", lines)]),
        ]
        first, second = attribute_commits(commits, sessions)
        assert first.commit_id == "c1" and first.origin == Origin.COPILOT
        assert second.commit_id == "c2" and second.origin == Origin.HUMAN

    def test_partial_band(self):
        proposed = ["l1", "l2", "l3", "l4"]
        committed = ["l1", "l2", "x", "y"]
        sessions = [make_session("s1", [make_request("r1", 0, tegs=[("a.py", proposed)])])]
        commits = [make_commit("c1", 10_000, [added_diff("a.py", committed)])]
        [attribution] = attribute_commits(commits, sessions)
        assert attribution.match_class == MatchClass.PARTIAL
        assert attribution.match_score == 0.5

    def test_below_partial_threshold_unmatched(self):
        proposed = ["l1", "l2", "l3", "l4"]
        committed = ["l1", "x", "y", "z"]
        sessions = [make_session("s1", [make_request("r1", 0, tegs=[("a.py", proposed)])])]
        commits = [make_commit("c1", 10_000, [added_diff("a.py", committed)])]
        [attribution] = attribute_commits(commits, sessions)
        assert attribution.origin == Origin.HUMAN
        assert attribution.match_score == 0.25  # best candidate is recorded

    def test_no_sessions_all_unmatched(self):
        commits = [make_commit("c1", 0, [added_diff("a.py", ["x"])])]
        [attribution] = attribute_commits(commits, [])
        assert attribution.origin == Origin.HUMAN
        assert attribution.match_class == MatchClass.UNMATCHED

    def test_best_score_wins_over_earlier_request(self):
        full_lines = ["a", "b"]
        sessions = [make_session("s1", [
            make_request("r1", 0, tegs=[("a.py", ["a", "zzz"])]),
            make_request("r2", 1_000, tegs=[("a.py", full_lines)]),
        ])]
        commits = [make_commit("c1", 30_000, [added_diff("a.py", full_lines)])]
        [attribution] = attribute_commits(commits, sessions)
        assert attribution.matched_request_id == "r2"
        assert attribution.match_class == MatchClass.FULL

    def test_tie_breaks_on_smaller_time_delta(self):
        lines = ["a", "b"]
        sessions = [make_session("s1", [
            make_request("r1", 0, tegs=[("a.py", lines)]),
            make_request("r2", 10_000, tegs=[("a.py", lines)]),
        ])]
        commits = [make_commit("c1", 40_000, [added_diff("a.py", lines)])]
        [attribution] = attribute_commits(commits, sessions)
        assert attribution.matched_request_id == "r2"  # closer in time

    def test_tie_breaks_on_request_id_when_same_timestamp(self):
        lines = ["a", "b"]
        sessions = [make_session("s1", [
            make_request("rB", 0, tegs=[("a.py", lines)]),
            make_request("rA", 0, tegs=[("a.py", lines)]),
        ])]
        commits = [make_commit("c1", 40_000, [added_diff("a.py", lines)])]
        [attribution] = attribute_commits(commits, sessions)
        assert attribution.matched_request_id == "rA"

    def test_empty_added_lines_skipped(self):
        commits = [make_commit("c1", 0, [FileDiff(file_path="a.py", removed_lines=["x"])])]
        assert attribute_commits(commits, []) == []

    def test_determinism(self):
        rng = random.Random(42)
        commits, sessions = random_corpus(rng)
        first = attribute_commits(commits, sessions)
        second = attribute_commits(commits, sessions)
        assert first == second

    def test_deleting_teg_lines_never_grows_matched_count(self):
        # The true monotone quantity: the multiset intersection against any
        # fixed diff can only shrink when proposal lines are removed. (The
        # score itself is NOT monotone, see the documented case below.)
        rng = random.Random(777)
        for _ in range(200):
            proposed = [f"p{rng.randint(0, 4)}" for _ in range(rng.randint(2, 6))]
            committed = [f"p{rng.randint(0, 6)}" for _ in range(rng.randint(0, 8))]
            diff = added_diff("a.py", committed)
            before = match_score(teg("a.py", proposed), diff) * len(normalize_lines(proposed))
            shorter = proposed[:-1]
            after_score = match_score(teg("a.py", shorter), diff)
            if after_score is None:
                continue
            after = after_score * len(normalize_lines(shorter))
            assert round(after, 9) <= round(before, 9) + 1e-9

    def test_deleting_unmatched_teg_line_can_upgrade_match(self):
        # Recall-style scoring: removing a proposal line the developer never
        # kept raises the score, so Partial can legitimately become Full.
        sessions = [make_session("s1", [make_request("r1", 0, tegs=[("a.py", ["a", "b"])])])]
        commits = [make_commit("c1", 10_000, [added_diff("a.py", ["a"])])]
        [before] = attribute_commits(commits, sessions)
        assert before.match_class == MatchClass.PARTIAL and before.match_score == 0.5

        shorter = [make_session("s1", [make_request("r1", 0, tegs=[("a.py", ["a"])])])]
        [after] = attribute_commits(commits, shorter)
        assert after.match_class == MatchClass.FULL and after.match_score == 1.0


class TestExternalSourceFlag:
    def test_fast_typing_flagged(self):
        commit = make_commit("c1", 60_000, [])
        diff = FileDiff(file_path="a.py", net_new_chars=1000)
        assert implied_wpm(1000, 60_000, AttributionConfig()) == 200.0
        assert external_source_flag(commit, 0, diff)

    def test_no_new_content_never_flagged(self):
        commit = make_commit("c1", 1_000, [])
        diff = FileDiff(file_path="a.py", net_new_chars=0)
        assert not external_source_flag(commit, 999, diff)

    def test_size_branch_independent_of_speed(self):
        commit = make_commit("c1", 3_600_000, [])
        diff = FileDiff(file_path="a.py", net_new_chars=1200)
        # 4 WPM over an hour, but over the size threshold.
        assert external_source_flag(commit, 0, diff)

    def test_slow_and_small_not_flagged(self):
        commit = make_commit("c1", 600_000, [])
        diff = FileDiff(file_path="a.py", net_new_chars=400)
        assert not external_source_flag(commit, 0, diff)

    def test_first_commit_uses_size_branch_only(self):
        commit = make_commit("c1", 0, [])
        small = FileDiff(file_path="a.py", net_new_chars=999)
        big = FileDiff(file_path="a.py", net_new_chars=1001)
        assert not external_source_flag(commit, None, small)
        assert external_source_flag(commit, None, big)

    def test_nonpositive_delta_with_content_flagged(self):
        commit = make_commit("c1", 1_000, [])
        diff = FileDiff(file_path="a.py", net_new_chars=10)
        assert external_source_flag(commit, 1_000, diff)
        assert external_source_flag(commit, 2_000, diff)

    def test_threshold_is_strict(self):
        commit = make_commit("c1", 60_000, [])
        # Exactly 100 WPM: 500 chars in one minute; not over the threshold.
        diff = FileDiff(file_path="a.py", net_new_chars=500)
        assert not external_source_flag(commit, 0, diff)


class TestConfigValidation:
    def test_bad_thresholds_rejected(self):
        with pytest.raises(ValueError):
            AttributionConfig(partial_threshold=0.9, full_threshold=0.5)
        with pytest.raises(ValueError):
            AttributionConfig(partial_threshold=0.0)
        with pytest.raises(ValueError):
            AttributionConfig(window_s=0)

    def test_window_override_respected(self):
        lines = ["a = 1"]
        sessions = [make_session("s1", [make_request("r1", 0, tegs=[("v.py", lines)])])]
        commits = [make_commit("c1", 400_000, [added_diff("v.py", lines)])]
        wide = AttributionConfig(window_s=600.0)
        [attribution] = attribute_commits(commits, sessions, wide)
        assert attribution.origin == Origin.COPILOT
        assert attribution.time_delta_s == 400.0
