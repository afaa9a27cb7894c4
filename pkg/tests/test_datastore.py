import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from skillprobe.datastore import (
    ConversationFile,
    Dataset,
    DatastoreError,
    atomic_write_json,
    file_stem,
    load_conversations,
    load_tree,
    merge_runs,
    save_conversations,
    save_tree,
)
from skillprobe.explorer import ConversationTree
from skillprobe.fixtures import FIG4_TEXTS

from conftest import explore_all


@pytest.fixture
def fig4_tree(fig4_set):
    return explore_all(fig4_set)["SKILLX"]


def test_first_run_transcript(fig4_tree, tmp_path):
    path = save_conversations(fig4_tree, tmp_path / "SKILLX.json")
    conv = load_conversations(path).conversations[0]
    assert conv == ["open skill x", FIG4_TEXTS[1], "continue", FIG4_TEXTS[2], "yes", FIG4_TEXTS[3]]


def test_zero_runs(tmp_path):
    path = save_conversations(ConversationTree("EMPTY"), tmp_path / "e.json")
    assert json.loads(path.read_text()) == {"skill_id": "EMPTY", "conversations": []}


def test_round_trip(fig4_tree, tmp_path):
    path = save_conversations(fig4_tree, tmp_path / "c.json")
    assert load_conversations(path) == ConversationFile.from_tree(fig4_tree)
    tpath = save_tree(fig4_tree, tmp_path / "t.json")
    assert load_tree(tpath).to_dict() == fig4_tree.to_dict()


def test_alternation_checked_on_load(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"skill_id": "S", "conversations": [["only an utterance"]]}))
    with pytest.raises(DatastoreError):
        load_conversations(p)


def test_merge_identical_is_unchanged(fig4_tree):
    f = ConversationFile.from_tree(fig4_tree)
    assert merge_runs(f, fig4_tree) == f


def test_merge_new_branch_adds_one(fig4_tree):
    # extended definition: a third opening leads to a new one-response branch
    from skillprobe.fixtures import fig4
    fx = fig4()
    fx.catalog[0]["sample_utterances"].append("start skill x")
    fx.definitions[0]["initial_transitions"]["start skill x"] = "n7"
    fx.definitions[0]["states"]["n7"] = {"response_text": "Skill X is asleep right now."}
    extended = explore_all(fx)["SKILLX"]
    base = ConversationFile.from_tree(fig4_tree)
    merged = merge_runs(base, extended)
    assert len(merged.conversations) == len(base.conversations) + 1
    assert len(merge_runs(merged, fig4_tree).conversations) == len(merged.conversations)


def test_merge_disjoint():
    a = ConversationFile("S", [["u1", "r1"], ["u2", "r2"], ["u3", "r3"]])
    b = ConversationFile("S", [["v1", "q1"], ["v2", "q2"]])
    assert len(merge_runs(a, b).conversations) == 5


def test_merge_rejects_other_skill():
    with pytest.raises(DatastoreError):
        merge_runs(ConversationFile("A"), ConversationFile("B"))


convs = st.lists(st.lists(st.sampled_from(["a", "b", "c"]), min_size=1, max_size=2)
                 .map(lambda xs: [x for pair in zip(xs, xs) for x in pair]), max_size=6)


@given(convs, convs, convs)
def test_merge_properties(x, y, z):
    a, b, c = (ConversationFile("S", v) for v in (x, y, z))

    def as_set(f):
        return {tuple(cv) for cv in f.conversations}

    assert merge_runs(merge_runs(a, b), b) == merge_runs(a, b)
    assert as_set(merge_runs(a, b)) == as_set(merge_runs(b, a))
    assert as_set(merge_runs(merge_runs(a, b), c)) == as_set(merge_runs(a, merge_runs(b, c)))
    assert as_set(merge_runs(a, b)) == as_set(a) | as_set(b)


def test_dataset_store_merges(fig4_tree, tmp_path):
    ds = Dataset(tmp_path / "ds")
    ds.store(fig4_tree)
    first = ds.conversation_path("SKILLX").read_bytes()
    ds.store(fig4_tree)
    assert ds.conversation_path("SKILLX").read_bytes() == first
    assert ds.skill_ids() == ["SKILLX"]
    assert [t.skill_id for t in ds.iter_trees()] == ["SKILLX"]


def test_atomic_write_leaves_no_temp(tmp_path):
    atomic_write_json(tmp_path / "x.json", {"b": 1, "a": [1, 2]})
    assert [p.name for p in tmp_path.iterdir()] == ["x.json"]
    assert (tmp_path / "x.json").read_text().startswith('{\n "a"')


def test_failed_write_keeps_old_file(tmp_path):
    target = tmp_path / "x.json"
    atomic_write_json(target, {"v": 1})
    with pytest.raises(TypeError):
        atomic_write_json(target, {"v": object()})
    assert json.loads(target.read_text()) == {"v": 1}


def test_file_stem_is_safe():
    assert file_stem("a/b:c") == "a_b_c"
    assert file_stem("..") == "_.."
