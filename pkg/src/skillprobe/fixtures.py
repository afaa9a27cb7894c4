"""Deterministic synthetic catalogs and skill definitions.

Every builder returns a :class:`FixtureSet` holding raw catalog entries, raw
definition documents and an ``expected`` manifest describing what was planted.
Builders take a seed and never consult global state, so the same call always
produces the same documents.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .text import normalize_utterance


@dataclass
class FixtureSet:
    name: str
    catalog: list[dict[str, Any]]
    definitions: list[dict[str, Any]]
    expected: dict[str, Any] = field(default_factory=dict)

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = out / "catalog.json", out / "definitions.json"
        for path, doc in zip(paths, (self.catalog, self.definitions)):
            path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        (out / "expected.json").write_text(
            json.dumps(self.expected, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        return paths


def _icon(name: str) -> str:
    return hashlib.sha1(name.encode("utf-8")).hexdigest()[:16]


def _entry(skill_id: str, name: str, invocation: str, *, samples=(), instructions=(),
           description: str = "", category: str = "kids", permissions=(), icon: str | None = None,
           mature: bool = False) -> dict[str, Any]:
    return {
        "skill_id": skill_id,
        "name": name,
        "invocation_name": invocation,
        "sample_utterances": list(samples),
        "additional_instructions": list(instructions),
        "description": description,
        "category": category,
        "permissions": list(permissions),
        "icon_digest": icon if icon is not None else _icon(name),
        "mature_content": mature,
    }


def _speech(text: str, *transitions: dict) -> dict[str, Any]:
    return {"response_text": text, "response_kind": "speech", "transitions": list(transitions)}


def _exact(phrase: str, target: str) -> dict:
    return {"exact": phrase, "next": target}


def _any(phrases, target: str) -> dict:
    return {"any_of": list(phrases), "next": target}


def _fallback(target: str) -> dict:
    return {"fallback": True, "next": target}


# two-opening tree with six responses ----------------------------------------------

FIG4_TEXTS = {
    1: "Welcome to Skill X. Say 'Continue'.",
    2: "Great. Would you like to do A?",
    3: "Okay, here is A. Have a nice day.",
    4: "No problem. Would you like to do B instead?",
    5: "Here is B. Thanks for trying it.",
    6: "Alright. See you next time.",
}


def fig4() -> FixtureSet:
    t = FIG4_TEXTS
    definition = {
        "skill_id": "SKILLX",
        "initial_transitions": {"open skill x": "n1", "launch skill x": "n1"},
        "states": {
            "n1": _speech(t[1], _exact("continue", "n2")),
            "n2": _speech(t[2], _exact("yes", "n3"), _exact("no", "n4")),
            "n3": _speech(t[3]),
            "n4": _speech(t[4], _exact("yes", "n5"), _exact("no", "n6")),
            "n5": _speech(t[5]),
            "n6": _speech(t[6]),
        },
    }
    record = _entry("SKILLX", "Skill X", "skill x", samples=["open skill x", "launch skill x"],
                    category="games", description="A tiny two-branch demo skill.")
    return FixtureSet("fig4", [record], [definition], {
        "paths": [[1, 2, 3], [1, 2, 4, 5], [1, 2, 4, 6]],
        "coverage": {"unique_responses": 6, "max_depth": 4, "max_branching": 2,
                     "initial_utterances": 2},
        "texts": {str(k): v for k, v in t.items()},
    })


# chains of benign states ------------------------------------------------------------

TOPICS = ["owls", "planets", "dinosaurs", "oceans", "volcanoes", "rainbows", "robots",
          "pirates", "trains", "bees", "castles", "comets", "forests", "deserts", "penguins",
          "dragons", "knights", "rockets", "reefs", "glaciers"]
ADJECTIVES = ["happy", "tiny", "clever", "sunny", "brave", "silly", "cosmic", "magic",
              "lucky", "jolly", "swift", "gentle", "bright", "curious", "cozy", "merry"]
NOUNS = ["fox", "otter", "comet", "panda", "rocket", "garden", "island", "wizard", "river",
         "lantern", "parrot", "castle", "meadow", "harbor", "tiger", "canyon"]


def _connector(style: int, i: int, topic: str, target: str, bye: str) -> dict[str, Any]:
    """A benign state whose natural follow-up leads to ``target``."""
    style %= 4
    if style == 0:
        return _speech(f"Do you want to hear part {i} of the {topic} story?",
                       _exact("yes", target), _exact("no", bye))
    if style == 1:
        return _speech(f"Say 'next' to hear clue {i} about {topic}.", _exact("next", target))
    if style == 2:
        return _speech(f"Here is fun fact number {i} about {topic}.",
                       _any(["tell me another one", "tell me more"], target))
    return _speech(f"How many {topic} do you think live on level {i}?", _fallback(target))


def _after(text: str) -> bool:
    """A question or request gets one more turn before the skill says goodbye."""
    return text.rstrip().endswith("?") or any(
        w in text.lower() for w in ("say", "tell", "please", "enter", "provide", "spell"))


def _prune(initial: dict[str, str], states: dict[str, Any]) -> dict[str, Any]:
    keep: set[str] = set()
    stack = list(initial.values())
    while stack:
        sid = stack.pop()
        if sid not in keep:
            keep.add(sid)
            stack.extend(t["next"] for t in states[sid]["transitions"])
    return {k: v for k, v in states.items() if k in keep}


def _chain_definition(skill_id: str, depth: int, final_text: str, rng: random.Random,
                      topic: str, opening: str, decoys: dict[int, str] | None = None,
                      extra_openings: dict[str, str] | None = None) -> dict[str, Any]:
    """States s1..s<depth> in a line; s<depth> says ``final_text``.

    ``decoys`` prefixes extra sentences to intermediate states; those states
    accept any reply so the chain stays reachable.
    """
    decoys = decoys or {}
    states: dict[str, Any] = {"bye": _speech(f"Okay. Come back soon to learn about {topic}."),
                              "end": _speech(f"Thanks for playing with the {topic} team. Goodbye.")}
    for i in range(1, depth):
        st = _connector(rng.randrange(4), i, topic, f"s{i + 1}", "bye")
        if i in decoys:
            st["response_text"] = f"{decoys[i]} {st['response_text']}"
            st["transitions"] = [_fallback(f"s{i + 1}")]
        states[f"s{i}"] = st
    states[f"s{depth}"] = _speech(final_text, _fallback("end")) if _after(final_text) \
        else _speech(final_text)
    initial = {opening: "s1"}
    for k, (utt, text) in enumerate((extra_openings or {}).items(), 1):
        states[f"o{k}"] = _speech(text)
        initial[utt] = f"o{k}"
    return {"skill_id": skill_id, "initial_transitions": initial,
            "states": _prune(initial, states)}


EXPLETIVE_PLANTS = [
    (11, "Here's your fact: A pig's orgasm lasts for 30 minutes.", "orgasm"),
    (5, "You're so ugly you'd scare the crap out of the toilet.", "crap"),
    (4, "That last riddle was damn hard, even for me.", "damn"),
    (4, "Holy sh1t, you found the hidden room!", "shit"),
    (2, "This level is kind of crappy, but let's keep going.", "crap"),
    (1, "Welcome to Roast Buddy. Your jokes stink, you dumbass.", "dumbass"),
    (1, "Welcome to Pirate Talk. Arr, where the hell did my parrot go.", "hell"),
    (1, "Welcome to Monster Mash. Get lost, you little bastard.", "bastard"),
]

PII_PLANTS = [
    (11, "Before the last level, what is your name?", "name"),
    (4, "Awesome! Before we start however; I'm curious...how old are you?", "age"),
    (4, "Please tell us your birthday", "date of birth"),
    (3, "Please provide me your age group. Such as adult, children, young", "age"),
    (3, "What is your zip code?", "zipcode"),
    (3, "Tell me your address so I can send you a postcard.", "address"),
    (3, "Can you tell me your phone number?", "phone number"),
    (3, "Where do you live?", "address"),
    (3, "What should I call you?", "name"),
    (2, "When were you born?", "date of birth"),
    (2, "What's your date of birth?", "date of birth"),
    (2, "Please enter your credit card number to unlock the bonus levels.", "credit card number"),
    (2, "Please spell your last name.", "name"),
    (2, "What is your home address?", "address"),
    (2, "Could you tell me your age?", "age"),
    (2, "To get started, tell me your name.", "name"),
    (1, "Welcome to Mr Tongue Twister. What is your name?", "name"),
    (1, "Welcome to Birthday Buddy. When is your birthday?", "date of birth"),
    (1, "Welcome to Age Guesser. How old are you?", "age"),
    (1, "Welcome to Pen Pals. What is your first name?", "name"),
]
# indexes into PII_PLANTS whose chain is only reachable from the description
DESCRIPTION_ONLY = {3: "sentence", 5: "quote", 10: "sentence"}

# mentions of PII words that do not ask the user for anything, plus a few
# harder near-misses; each is used by two clean skills
PII_DECOYS = [
    "Your age has been saved.",
    "We will never share your address.",
    "My name is Robo and I love puzzles.",
    "Do you know the name of the tallest mountain?",
    "What is the name of this constellation?",
    "Can you guess my age?",
    "Say 'address book' to hear contact tips.",
    "How old is the oldest tree in the world?",
    "The word 'age' has three letters.",
    "Our privacy policy explains how we use your name.",
    "The name Oliver means olive tree.",
    "What is your favorite animal name?",
    "Did you know a phone number in the US has ten digits?",
    "Tell me your favorite color.",
    "What do you think your pet's name should be?",
]
# near-miss that is used once: reads like a request for the user's name
PII_HARD_DECOY = "Tell me your favorite name for a puppy."
# token-boundary traps for the expletive wordlist
EXPLETIVE_DECOYS = ["Scunthorpe is a town in England.", "Butter makes toast tasty.",
                    "Our class assistant loves grass.", "Pass the cocktail sauce, please."]


def _invocation(i: int) -> tuple[str, str]:
    adj = ADJECTIVES[i % len(ADJECTIVES)]
    noun = NOUNS[(i // len(ADJECTIVES)) % len(NOUNS)]
    inv = f"{adj} {noun} {i}" if i >= len(ADJECTIVES) * len(NOUNS) else f"{adj} {noun}"
    return inv.title(), inv


def planted_risk_corpus(seed: int = 7, n_clean: int = 100) -> FixtureSet:
    """Expletive and PII plants at fixed depths among clean kid skills."""
    rng = random.Random(seed)
    catalog, definitions = [], []
    plants: list[dict[str, Any]] = []
    counter = 0

    def new_skill(prefix: str) -> tuple[str, str, str, str]:
        nonlocal counter
        counter += 1
        name, inv = _invocation(counter * 7 % 256 + counter // 256 * 256)
        return f"{prefix}{counter:04d}", name, inv, TOPICS[counter % len(TOPICS)]

    for depth, text, term in EXPLETIVE_PLANTS:
        sid, name, inv, topic = new_skill("KE")
        opening = f"open {inv}"
        if depth == 1:
            definition = {"skill_id": sid, "initial_transitions": {opening: "s1"},
                          "states": {"s1": _speech(text)}}
        else:
            definition = _chain_definition(sid, depth, text, rng, topic, opening)
        definitions.append(definition)
        catalog.append(_entry(sid, name, inv, samples=[opening],
                              description=f"Fun facts and jokes about {topic} for kids."))
        plants.append({"skill_id": sid, "kind": "expletive", "depth": depth, "text": text,
                       "evidence": term})

    for idx, (depth, text, keyword) in enumerate(PII_PLANTS):
        sid, name, inv, topic = new_skill("KP")
        opening = f"open {inv}"
        samples = [opening]
        description = f"Games and stories about {topic}."
        extra: dict[str, str] = {}
        route = DESCRIPTION_ONLY.get(idx)
        if route == "sentence":
            hidden = f"ask {inv} to start the game"
            description = (f"Games and stories about {topic}. "
                           f"Alexa, ask {name} to start the game.")
        elif route == "quote":
            hidden = f"start the {topic} secret game"
            description = (f"Games and stories about {topic}. "
                           f"Say \"start the {topic} secret game\" to play the secret level.")
        if route:
            # the listed sample only reaches a dead end
            extra = {opening: f"Welcome to {name}. There is nothing here yet."}
            entry_opening = hidden
        else:
            entry_opening = opening
        if depth == 1:
            states = {"s1": _speech(text, _fallback("end")),
                      "end": _speech(f"Thanks for playing with the {topic} team. Goodbye.")}
            definition = {"skill_id": sid, "initial_transitions": {entry_opening: "s1"},
                          "states": states}
            if extra:
                definition["states"]["o1"] = _speech(extra[opening])
                definition["initial_transitions"][opening] = "o1"
        else:
            definition = _chain_definition(sid, depth, text, rng, topic, entry_opening,
                                           extra_openings=extra)
        definitions.append(definition)
        catalog.append(_entry(sid, name, inv, samples=samples, description=description))
        plants.append({"skill_id": sid, "kind": "pii_request", "depth": depth, "text": text,
                       "evidence": keyword, "description_only": bool(route)})

    clean_ids = []
    pii_slots = [d for d in PII_DECOYS for _ in range(2)] + [PII_HARD_DECOY]
    decoy_slots = pii_slots + EXPLETIVE_DECOYS
    decoy_for = {i * 2: d for i, d in enumerate(decoy_slots)}
    for i in range(n_clean):
        sid, name, inv, topic = new_skill("KC")
        clean_ids.append(sid)
        opening = f"open {inv}"
        depth = 1 + rng.randrange(6)
        final = rng.choice([
            f"That's all the {topic} facts for today. Goodbye.",
            f"You finished the {topic} adventure. Great job!",
            f"Thanks for exploring {topic} with me. See you soon.",
        ])
        decoy = decoy_for.get(i)
        decoys = {}
        if decoy is not None:
            if depth == 1:
                final = f"{decoy} {final}"
            else:
                decoys[1 + rng.randrange(depth - 1)] = decoy
        definitions.append(_chain_definition(sid, depth, final, rng, topic, opening, decoys))
        permissions = ["profile_name"] if i % 17 == 0 else []
        catalog.append(_entry(sid, name, inv, samples=[opening], permissions=permissions,
                              description=f"A calm place to learn about {topic}."))

    return FixtureSet("planted", catalog, definitions, {
        "plants": plants, "clean_skill_ids": clean_ids,
        "pii_decoys": pii_slots, "expletive_decoys": list(EXPLETIVE_DECOYS),
    })


# shared opening utterances ----------------------------------------------------------

CONFOUND_FORMS = ["start {t} facts", "open {t} quiz", "play {t} sounds", "start {t} story",
                  "ask {t} trivia for a question"]
CONFOUND_TOPICS = ["owl", "human body", "space", "ocean", "dinosaur", "math", "spelling",
                   "animal", "bedtime", "weather", "music", "history", "science", "cooking"]


def confound_corpus(seed: int = 11, n_entries: int = 50) -> FixtureSet:
    """Opening utterances shared by two or more skills, across category mixes."""
    rng = random.Random(seed)
    catalog: list[dict[str, Any]] = []
    definitions: list[dict[str, Any]] = []
    openings_of: dict[str, list[str]] = {}
    utterances = []
    for form in CONFOUND_FORMS:
        for topic in CONFOUND_TOPICS:
            utterances.append(form.format(t=topic))
    rng.shuffle(utterances)
    shared = utterances[:n_entries]
    n = 0
    members_of: list[list[str]] = []
    plan = ["kids"] * 15 + ["joint"] * 20 + ["nonkids"] * 15
    plan = (plan * (n_entries // len(plan) + 1))[:n_entries]
    rng.shuffle(plan)
    kid_pool: list[str] = []
    adult_pool: list[str] = []

    def add_skill(kids: bool, utt: str, same_as: dict | None = None) -> str:
        nonlocal n
        n += 1
        sid = f"CF{n:04d}"
        if same_as is not None:
            name, icon = same_as["name"], same_as["icon_digest"]
        else:
            name, icon = f"{utt.split()[1].title()} Helper {n}", None
        category = "kids" if kids else rng.choice(["games", "education", "lifestyle"])
        rec = _entry(sid, name, f"helper {n}", samples=[utt, f"open helper {n}"],
                     category=category, icon=icon, mature=(not kids and n % 3 == 0),
                     description=f"Everything about {utt.split()[1]}.")
        catalog.append(rec)
        openings_of[sid] = [utt, f"open helper {n}"]
        (kid_pool if kids else adult_pool).append(sid)
        return sid

    for e, (utt, mix) in enumerate(zip(shared, plan)):
        size = 2 + (e % 3 == 0)
        if mix == "kids":
            kinds = [True] * size
        elif mix == "nonkids":
            kinds = [False] * size
        else:
            kinds = [True, False] + [e % 2 == 0] * (size - 2)
            rng.shuffle(kinds)
        members = []
        for j, kids in enumerate(kinds):
            pool = kid_pool if kids else adult_pool
            if j == 0 and e % 5 == 4 and pool:
                # an existing skill also lists this utterance
                sid = pool[rng.randrange(len(pool))]
                rec = next(r for r in catalog if r["skill_id"] == sid)
                rec["additional_instructions"].append(utt)
                openings_of[sid].append(utt)
            else:
                same = None
                if e % 7 == 3 and j == 1:
                    same = next(r for r in catalog if r["skill_id"] == members[0])
                sid = add_skill(kids, utt, same)
            if sid not in members:
                members.append(sid)
        members_of.append(members)

    # in-skill phrases shared by many skills never form entries
    for rec in catalog[:6]:
        rec["additional_instructions"].append("tell me a joke")
    # a loner whose opening is unique
    loner = add_skill(False, "start unique lighthouse facts")

    overrides: dict[str, str] = {}
    for e in range(2, n_entries, 9):
        outsiders = sorted(set(openings_of) - set(members_of[e]))
        overrides[shared[e]] = outsiders[rng.randrange(len(outsiders))]

    for rec in catalog:
        sid = rec["skill_id"]
        states = {"welcome": _speech(f"Welcome to {rec['name']}. Goodbye.")}
        definitions.append({"skill_id": sid,
                            "initial_transitions": {normalize_utterance(u): "welcome"
                                                    for u in openings_of[sid]},
                            "states": states})
    return FixtureSet("confound", catalog, definitions, {
        "shared_utterances": shared, "overrides": overrides, "loner": loner,
    })


# wide trees for load tests ----------------------------------------------------------------

def _binary_tree(skill_id: str, depth: int, topic: str) -> dict[str, Any]:
    states: dict[str, Any] = {}

    def build(code: str) -> str:
        sid = f"t{code}"
        level = len(code)
        if level + 1 >= depth:
            states[sid] = _speech(f"You reached {topic} treasure room {code or 'zero'}. Goodbye.")
        else:
            states[sid] = _speech(
                f"At {topic} crossroad {code or 'start'}, do you want to take the left path?",
                _exact("yes", build(code + "L")), _exact("no", build(code + "R")))
        return sid

    root = build("")
    return {"skill_id": skill_id, "initial_transitions": {f"open {topic} maze {skill_id.lower()}": root},
            "states": states}


def throughput_corpus(n_skills: int = 500, depth: int = 6) -> FixtureSet:
    catalog, definitions = [], []
    for i in range(n_skills):
        sid = f"TP{i:05d}"
        topic = TOPICS[i % len(TOPICS)]
        definitions.append(_binary_tree(sid, depth, topic))
        catalog.append(_entry(sid, f"{topic.title()} Maze {i}", f"{topic} maze {sid.lower()}",
                              samples=[f"open {topic} maze {sid.lower()}"], category="games"))
    leaves = 2 ** (depth - 1)
    return FixtureSet("throughput", catalog, definitions,
                      {"leaves_per_skill": leaves, "skills": n_skills})


FIXTURES: dict[str, Callable[[], FixtureSet]] = {
    "fig4": fig4,
    "planted": planted_risk_corpus,
    "confound": confound_corpus,
    "throughput": throughput_corpus,
}
