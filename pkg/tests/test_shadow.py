"""Shadow repository reading: kinds, diffs, replay closure, read-only."""
import hashlib
from pathlib import Path

import pytest

from traceweave.errors import CorpusError
from traceweave.linediff import apply_file_diff, join_lines
from traceweave.models import CommitKind
from traceweave.shadow import RepoSource, parse_commit_message, read_shadow_history

from conftest import USER, run_git


def checksum_tree(root: Path) -> str:
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            digest.update(str(path.relative_to(root)).encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


def replay_files(commits) -> dict[str, list[str]]:
    state: dict[str, list[str]] = {}
    for commit in commits:
        for diff in commit.file_diffs:
            result = apply_file_diff(state.get(diff.file_path), diff)
            if result is None:
                state.pop(diff.file_path, None)
            else:
                state[diff.file_path] = result
    return state


class TestMessageGrammar:
    @pytest.mark.parametrize("message,kind", [
        ("SAVE src/a.py", CommitKind.SAVE),
        ("CREATE src/a.py", CommitKind.CREATE),
        ("DELETE src/a.py", CommitKind.DELETE),
        ("DIRTY_SNAPSHOT src/a.py", CommitKind.DIRTY_SNAPSHOT),
        ("DIRTY_SNAPSHOT —", CommitKind.DIRTY_SNAPSHOT),
        ("refactor stuff", CommitKind.UNKNOWN),
        ("save src/a.py", CommitKind.UNKNOWN),
        ("", CommitKind.UNKNOWN),
    ])
    def test_kinds(self, message, kind):
        assert parse_commit_message(message)[0] == kind

    def test_rename_parses_both_paths(self):
        kind, old, new = parse_commit_message("RENAME src/a.py -> src/b.py")
        assert kind == CommitKind.RENAME
        assert (old, new) == ("src/a.py", "src/b.py")

    def test_malformed_rename_is_unknown(self):
        assert parse_commit_message("RENAME src/a.py")[0] == CommitKind.UNKNOWN


class TestReadShadowHistory:
    def test_create_then_save(self, git_repo):
        repo, commit, base_ts = git_repo
        commit("CREATE a.py", {"a.py": "x = 1\ny = 2\n"}, 0)
        commit("SAVE a.py", {"a.py": "x = 1\ny = 3\n"}, 10)
        commits = read_shadow_history(RepoSource.of(repo), USER)
        assert [c.kind for c in commits] == [CommitKind.CREATE, CommitKind.SAVE]
        assert commits[0].timestamp_ms == base_ts * 1000
        assert commits[1].timestamp_ms == (base_ts + 10) * 1000
        second = commits[1].file_diffs[0]
        assert second.added_lines == ["y = 3"]
        assert second.removed_lines == ["y = 2"]

    def test_empty_dirty_snapshot(self, git_repo):
        repo, commit, _ = git_repo
        commit("DIRTY_SNAPSHOT —", {}, 0)
        commits = read_shadow_history(RepoSource.of(repo), USER)
        assert len(commits) == 1
        assert commits[0].kind == CommitKind.DIRTY_SNAPSHOT
        assert commits[0].file_diffs == []

    def test_free_text_message_still_diffs(self, git_repo):
        repo, commit, _ = git_repo
        commit("refactor stuff", {"a.py": "z = 9\n"}, 0)
        commits = read_shadow_history(RepoSource.of(repo), USER)
        assert commits[0].kind == CommitKind.UNKNOWN
        assert commits[0].file_diffs[0].added_lines == ["z = 9"]

    def test_deletion_diff(self, git_repo):
        repo, commit, _ = git_repo
        commit("CREATE a.py", {"a.py": "gone\n"}, 0)
        commit("DELETE a.py", {"a.py": None}, 10)
        commits = read_shadow_history(RepoSource.of(repo), USER)
        diff = commits[1].file_diffs[0]
        assert diff.deleted and diff.removed_lines == ["gone"]

    def test_merge_commit_warns_first_parent_taken(self, git_repo):
        repo, commit, base_ts = git_repo
        commit("CREATE a.py", {"a.py": "base\n"}, 0)
        run_git(repo, "checkout", "--quiet", "-b", "side")
        commit("SAVE b.py", {"b.py": "side\n"}, 10)
        run_git(repo, "checkout", "--quiet", "main")
        commit("SAVE a.py", {"a.py": "base\nmain\n"}, 20)
        run_git(repo, "merge", "--quiet", "--no-ff", "side", "-m", "merge side", ts=base_ts + 30)
        warnings: list[str] = []
        commits = read_shadow_history(RepoSource.of(repo), USER, on_warning=warnings.append)
        assert any("merge" in w for w in warnings)
        # First-parent chain: create, main-side save, merge.
        assert len(commits) == 3
        merge_diff = commits[2].file_diffs
        assert [d.file_path for d in merge_diff] == ["b.py"]

    def test_out_of_order_timestamps_resorted_not_dropped(self, git_repo):
        repo, commit, _ = git_repo
        commit("CREATE a.py", {"a.py": "1\n"}, 100)
        commit("SAVE a.py", {"a.py": "1\n2\n"}, 50)  # earlier author date
        warnings: list[str] = []
        commits = read_shadow_history(RepoSource.of(repo), USER, on_warning=warnings.append)
        assert any("out of order" in w for w in warnings)
        assert len(commits) == 2
        assert commits[0].timestamp_ms <= commits[1].timestamp_ms

    def test_read_is_idempotent_and_read_only(self, git_repo):
        repo, commit, _ = git_repo
        commit("CREATE a.py", {"a.py": "x\n"}, 0)
        commit("SAVE a.py", {"a.py": "x\ny\n"}, 10)
        before = checksum_tree(repo / ".git")
        first = read_shadow_history(RepoSource.of(repo), USER)
        second = read_shadow_history(RepoSource.of(repo), USER)
        assert first == second
        assert checksum_tree(repo / ".git") == before

    def test_missing_repo_fatal(self, tmp_path):
        with pytest.raises(CorpusError):
            read_shadow_history(RepoSource.of(tmp_path / "nope"), USER)

    def test_empty_repo_fatal(self, tmp_path):
        repo = tmp_path / "empty"
        repo.mkdir()
        run_git(repo, "init", "--quiet", "-b", "main")
        with pytest.raises(CorpusError):
            read_shadow_history(RepoSource.of(repo), USER)

    def test_bundle_roundtrip(self, git_repo, tmp_path):
        repo, commit, _ = git_repo
        commit("CREATE a.py", {"a.py": "x\n"}, 0)
        commit("SAVE a.py", {"a.py": "x\ny\n"}, 10)
        bundle = tmp_path / "user.bundle"
        run_git(repo, "bundle", "create", str(bundle), "--all")
        from_dir = read_shadow_history(RepoSource.of(repo), USER)
        from_bundle = read_shadow_history(RepoSource.of(bundle), USER)
        assert [c.commit_id for c in from_bundle] == [c.commit_id for c in from_dir]
        assert from_bundle == from_dir

    def test_binary_blob_flagged(self, git_repo):
        repo, commit, _ = git_repo
        (repo / "blob.bin").write_bytes(b"\x00\x01\x02\x03")
        run_git(repo, "add", "blob.bin")
        run_git(repo, "commit", "--quiet", "-m", "CREATE blob.bin", ts=1_767_225_600)
        commits = read_shadow_history(RepoSource.of(repo), USER)
        diff = commits[0].file_diffs[0]
        assert diff.is_binary and diff.added_lines == []


class TestReplayClosure:
    def test_full_history_reconstructs_final_content(self, git_repo):
        repo, commit, _ = git_repo
        commit("CREATE a.py", {"a.py": "def f():\n    return 1\n"}, 0)
        commit("CREATE b.py", {"b.py": "B1\nB2\n"}, 10)
        commit("SAVE a.py", {"a.py": "def f():\n    return 2\n\nprint(f())\n"}, 20)
        commit("DIRTY_SNAPSHOT b.py", {"b.py": "B1\nB2 edited\n"}, 30)
        commit("SAVE b.py", {"b.py": "B2 edited\nB3\n"}, 40)
        commit("DELETE a.py", {"a.py": None}, 50)
        commit("RENAME b.py -> c.py", {"b.py": None, "c.py": "B2 edited\nB3\n"}, 60)
        commits = read_shadow_history(RepoSource.of(repo), USER)
        state = replay_files(commits)
        expected = {}
        for line in run_git(repo, "ls-tree", "-r", "--name-only", "HEAD").splitlines():
            expected[line] = run_git(repo, "show", f"HEAD:{line}")
        assert {p: join_lines(lines) for p, lines in state.items()} == expected
