import json
import socket
import threading
from concurrent.futures import ThreadPoolExecutor

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillprobe.fixtures import FIG4_TEXTS
from skillprobe.skillhost import (
    NOT_UNDERSTOOD,
    DefinitionError,
    EmbeddedLink,
    HostClient,
    HostUnavailable,
    ProtocolError,
    RemoteError,
    RemoteLink,
    ResolverPolicy,
    ResponseKind,
    SkillHost,
    load_skill_definitions,
    parse_address,
    parse_definitions,
    serve,
)

from conftest import host_of


def _skill(sid, category="misc", opening="start quiz", text=None, transitions=()):
    return {"skill_id": sid, "category": category,
            "initial_transitions": {opening: "a"},
            "states": {"a": {"response_text": text or f"Hello from {sid}. Ready?",
                             "transitions": list(transitions)},
                       "b": {"response_text": f"Bye from {sid}."}}
            if transitions else {"a": {"response_text": text or f"Hello from {sid}."}}}


def test_fig4_definitions_load(tmp_path, fig4_set):
    path = tmp_path / "defs.json"
    path.write_text(json.dumps(fig4_set.definitions))
    defs = load_skill_definitions(path)
    assert list(defs) == ["SKILLX"]
    assert len(defs["SKILLX"].states) == 6


def test_dangling_target_names_the_state():
    raw = _skill("S1", transitions=[{"exact": "yes", "next": "nowhere"}])
    with pytest.raises(DefinitionError, match="nowhere"):
        parse_definitions([raw])


def test_missing_initial_transition():
    raw = _skill("S1")
    raw["initial_transitions"] = {}
    with pytest.raises(DefinitionError, match="initial"):
        parse_definitions([raw])


def test_empty_document():
    assert parse_definitions([]) == {}


def test_bad_definitions_collected_when_issues_given():
    issues = []
    good = _skill("S1")
    bad = _skill("S2", transitions=[{"exact": "yes", "next": "zz"}])
    defs = parse_definitions([good, bad], issues=issues)
    assert list(defs) == ["S1"]
    assert [i.skill_id for i in issues] == ["S2"]


def test_audio_state_with_text_rejected():
    raw = _skill("S1")
    raw["states"]["a"]["response_kind"] = "audio"
    with pytest.raises(DefinitionError):
        parse_definitions([raw])


def test_sessions_are_distinct(fig4_host):
    assert fig4_host.open_session() != fig4_host.open_session()


def test_fig4_walk(fig4_host):
    sid = fig4_host.open_session()
    r = fig4_host.handle_request(sid, "open skill x")
    assert (r.kind, r.text, r.invoked_skill_id) == (ResponseKind.SPEECH, FIG4_TEXTS[1], "SKILLX")
    assert r.session_open
    assert fig4_host.handle_request(sid, "Continue").text == FIG4_TEXTS[2]
    r = fig4_host.handle_request(sid, "yes")
    assert r.text == FIG4_TEXTS[3]
    assert not r.session_open


def test_gibberish_without_fallback(fig4_host):
    sid = fig4_host.open_session()
    fig4_host.handle_request(sid, "open skill x")
    r = fig4_host.handle_request(sid, "purple monkey dishwasher")
    assert (r.kind, r.text) == (ResponseKind.ERROR, NOT_UNDERSTOOD)


def test_unknown_session(fig4_host):
    with pytest.raises(ProtocolError) as exc:
        fig4_host.handle_request("nope", "open skill x")
    assert exc.value.code == "unknown_session"


def test_matcher_order_exact_before_any_of_before_fallback():
    raw = {"skill_id": "M", "initial_transitions": {"go": "s"}, "states": {
        "s": {"response_text": "Pick.", "transitions": [
            {"fallback": True, "next": "f"}, {"any_of": ["red", "blue"], "next": "a"},
            {"exact": "red", "next": "e"}]},
        "f": {"response_text": "F."}, "a": {"response_text": "A."}, "e": {"response_text": "E."}}}
    host = SkillHost(parse_definitions([raw]))
    out = []
    for utt in ("red", "blue", "green"):
        sid = host.open_session()
        host.handle_request(sid, "go")
        out.append(host.handle_request(sid, utt).text)
    assert out == ["E.", "A.", "F."]


HUMAN_BODY = [_skill("K1", "kids", "start human body quiz"), _skill("M1", "misc", "start human body quiz"),
              _skill("Z9", "misc", "open zoo")]


@pytest.mark.parametrize("mode,expected", [
    ("prefer-non-kid", "M1"), ("prefer-kid", "K1"), ("lexicographic", "K1"), ("registration", "K1"),
])
def test_resolver_modes(mode, expected):
    host = SkillHost(parse_definitions(HUMAN_BODY), ResolverPolicy.parse(mode))
    assert host.resolve_invocation("Start human body quiz") == expected


def test_single_candidate_any_mode():
    for mode in ("registration", "lexicographic", "prefer-non-kid", "prefer-kid", "seeded"):
        host = SkillHost(parse_definitions(HUMAN_BODY), ResolverPolicy.parse(mode, seed=3))
        assert host.resolve_invocation("open zoo") == "Z9"


def test_override_emulates_irrelevant_invocation():
    policy = ResolverPolicy.parse("lexicographic", overrides={"Start Human Body Quiz": "Z9"})
    host = SkillHost(parse_definitions(HUMAN_BODY), policy)
    assert host.resolve_invocation("start human body quiz") == "Z9"
    sid = host.open_session()
    r = host.handle_request(sid, "start human body quiz")
    assert r.invoked_skill_id == "Z9" and r.text == "Hello from Z9."


def test_override_to_unknown_skill_rejected():
    with pytest.raises(ValueError):
        SkillHost(parse_definitions(HUMAN_BODY), ResolverPolicy.parse("lexicographic", overrides={"x": "NOPE"}))


def test_seeded_is_deterministic():
    defs = parse_definitions([_skill(f"S{i}", opening="open shared") for i in range(6)])
    picks = {SkillHost(defs, ResolverPolicy.parse("seeded", seed=s)).resolve_invocation("open shared")
             for s in range(20)}
    again = {SkillHost(defs, ResolverPolicy.parse("seeded", seed=s)).resolve_invocation("open shared")
             for s in range(20)}
    assert picks == again and len(picks) > 1


def test_enable_disable(fig4_host):
    sid = fig4_host.open_session()
    assert fig4_host.set_skill_enabled(sid, "SKILLX", True) == ("SKILLX",)
    assert fig4_host.set_skill_enabled(sid, "SKILLX", True) == ("SKILLX",)
    assert fig4_host.set_skill_enabled(sid, "SKILLX", False) == ()


def test_invocation_auto_enables(fig4_host):
    sid = fig4_host.open_session()
    fig4_host.disable_all(sid)
    r = fig4_host.handle_request(sid, "launch skill x")
    assert r.enabled_skill_ids == ("SKILLX",)


def test_thousand_concurrent_sessions_are_isolated(fig4_host):
    def walk(i):
        sid = fig4_host.open_session()
        answers = ["yes"] if i % 2 else ["no", "no"]
        texts = [fig4_host.handle_request(sid, "open skill x").text,
                 fig4_host.handle_request(sid, "continue").text]
        texts += [fig4_host.handle_request(sid, a).text for a in answers]
        fig4_host.close_session(sid)
        return i, texts

    with ThreadPoolExecutor(16) as pool:
        results = list(pool.map(walk, range(1000)))
    for i, texts in results:
        tail = [FIG4_TEXTS[3]] if i % 2 else [FIG4_TEXTS[4], FIG4_TEXTS[6]]
        assert texts == [FIG4_TEXTS[1], FIG4_TEXTS[2]] + tail
    assert fig4_host.session_count == 0


@given(st.lists(st.sampled_from(["open skill x", "launch skill x", "continue", "yes", "no",
                                 "tell me more", "Continue!"]), max_size=12),
       st.lists(st.sampled_from(["open skill x", "continue", "no", "yes"]), max_size=6))
@settings(max_examples=60, deadline=None)
def test_session_isolation_and_determinism(script_a, script_b):
    from skillprobe.fixtures import fig4
    fx = fig4()
    host = host_of(fx)
    solo = host_of(fx)
    a, b, s = host.open_session(), host.open_session(), solo.open_session()
    out_a, out_solo = [], []
    for i, utt in enumerate(script_a):
        if i < len(script_b):
            host.handle_request(b, script_b[i])
        out_a.append(host.handle_request(a, utt))
        out_solo.append(solo.handle_request(s, utt))
    assert out_a == out_solo


kinds = st.sampled_from(["kids", "misc", "games"])


@given(st.lists(kinds, min_size=1, max_size=6), st.sampled_from(["prefer-non-kid", "prefer-kid"]))
def test_preference_modes_never_pick_the_other_side(categories, mode):
    defs = parse_definitions([_skill(f"S{i}", c, "open shared") for i, c in enumerate(categories)])
    chosen = SkillHost(defs, ResolverPolicy.parse(mode)).resolve_invocation("open shared")
    is_kid = defs[chosen].is_kids
    if mode == "prefer-non-kid" and any(c != "kids" for c in categories):
        assert not is_kid
    if mode == "prefer-kid" and "kids" in categories:
        assert is_kid


# wire protocol -------------------------------------------------------------------------

@pytest.fixture
def server(fig4_host):
    srv = serve(fig4_host)
    yield srv
    srv.shutdown()


def _raw(server):
    sock = socket.create_connection(server.address, timeout=5)
    return sock, sock.makefile("rwb")


def _send(fh, payload: bytes):
    fh.write(payload)
    fh.flush()
    return json.loads(fh.readline())


def test_protocol_unknown_session(server):
    sock, fh = _raw(server)
    reply = _send(fh, b'{"op":"say","session":"s999999","text":"hi"}\n')
    assert reply["ok"] is False and reply["error_code"] == "unknown_session"
    sock.close()


def test_protocol_malformed_frame_keeps_connection(server):
    sock, fh = _raw(server)
    assert _send(fh, b"this is not json\n")["error_code"] == "bad_request"
    assert _send(fh, b"[1,2]\n")["error_code"] == "bad_request"
    opened = _send(fh, b'{"op":"open"}\n')
    assert opened["ok"] and opened["session"]
    sid = opened["session"].encode()
    reply = _send(fh, b'{"op":"say","session":"' + sid + b'","text":"open skill x"}\n')
    assert reply["text"] == FIG4_TEXTS[1]
    sock.close()


def test_protocol_five_clients_hundred_turns(server):
    script = ["open skill x", "continue", "no", "yes"]
    expected = [FIG4_TEXTS[1], FIG4_TEXTS[2], FIG4_TEXTS[4], FIG4_TEXTS[5]]

    def client(_):
        c = HostClient(server.address)
        got = []
        try:
            sid = c.call({"op": "open"})["session"]
            for turn in range(100):
                reply = c.call({"op": "say", "session": sid, "text": script[turn % 4]})
                got.append((reply["text"], expected[turn % 4]))
        finally:
            c.close()
        return got

    with ThreadPoolExecutor(5) as pool:
        results = [pair for chunk in pool.map(client, range(5)) for pair in chunk]
    assert len(results) == 500
    assert all(text == want for text, want in results)


def test_remote_matches_embedded(server, fig4_host):
    remote = RemoteLink(server.address)
    embedded = EmbeddedLink(fig4_host)
    script = ["launch skill x", "continue", "no", "no"]
    try:
        for link in (remote, embedded):
            s = link.open()
            out = [s.say(u) for u in script]
            s.close()
            if link is remote:
                remote_out = out
        assert remote_out == out
    finally:
        remote.close()


def test_remote_errors(server):
    link = RemoteLink(server.address)
    s = link.open()
    with pytest.raises(RemoteError):
        s.enable("NOPE")
    s.close()
    link.close()


def test_unreachable_host():
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    with pytest.raises(HostUnavailable):
        HostClient(("127.0.0.1", port))


def test_parse_address():
    assert parse_address("localhost:7878") == ("localhost", 7878)
    with pytest.raises(ValueError):
        parse_address("localhost")


def test_shutdown_waits_for_nothing_when_idle(fig4_host):
    srv = serve(fig4_host)
    t = threading.Thread(target=srv.shutdown)
    t.start()
    t.join(5)
    assert not t.is_alive()
