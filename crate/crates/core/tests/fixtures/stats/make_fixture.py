"""Regenerates the 500-row stats fixture and its expected counts.

The expected values are computed here, independently of the Rust code.
Run from this directory: python3 make_fixture.py
"""
import json
import random

RELS = ["xEffect", "oEffect", "xWant", "oWant", "xReact", "oReact", "xNeed", "xAttr", "xIntent"]
VERBS = ["visits", "cleans", "paints", "buys", "sells", "finds", "loses", "fixes", "opens", "closes"]
PLACES = {
    "bar": ["entertainment place", "drinking venue"],
    "casino": ["entertainment place", "gambling venue"],
    "park": ["public space", "outdoor area"],
    "library": ["public space", "building"],
    "kitchen": ["room"],
    "garage": ["room", "building"],
    "guitar": ["instrument", "musical item"],
    "piano": ["instrument"],
    "car": ["vehicle", "machine"],
    "bike": ["vehicle"],
    "laptop": ["device", "machine"],
    "phone": ["device"],
}
TAILS = ["to relax", "feels happy", "gets tired", "to go home", "is careful", "to pay", "smiles",
         "to call a friend", "feels proud", "to rest", "is generous", "to learn more", "gets dirty"]

rng = random.Random(500)
nouns = sorted(PLACES)

def norm(s):
    return " ".join(s.lower().split())

events = []
for v in VERBS:
    for n in nouns:
        head = f"PersonX {v} the {n}"
        events.append((head, n))
rng.shuffle(events)
events = events[:110]

triples = []
seen = set()
while len(triples) < 500:
    head, _ = rng.choice(events)
    rel = rng.choice(RELS)
    tail = rng.choice(TAILS)
    if (head, rel, tail) in seen:
        continue
    seen.add((head, rel, tail))
    triples.append({"head": head, "relation": rel, "tail": tail})

used_heads = []
for t in triples:
    if t["head"] not in used_heads:
        used_heads.append(t["head"])
noun_of = dict(events)

concepts = []
for i, head in enumerate(used_heads):
    if i % 7 == 3:
        continue  # some events have no concepts at all
    n = noun_of[head]
    start = head.index(" " + n) + 1
    for j, c in enumerate(PLACES[n]):
        p = [0.95, 0.9, 0.8999, 0.97][(i + j) % 4]
        label = "annotated" if (i + j) % 5 == 0 else "pseudo"
        concepts.append({"head": head, "start": start, "end": start + len(n), "concept": c,
                         "plausibility": p, "instance": n, "label": label})
    # case / spacing variant of a concept label, normalizing to an existing one
    if i % 11 == 0:
        c = PLACES[n][0].upper().replace(" ", "  ")
        concepts.append({"head": head, "start": start, "end": start + len(n), "concept": c,
                         "plausibility": 1.0, "label": "pseudo"})

abstracts = []
for k, t in enumerate(triples):
    if k % 3 != 0:
        continue
    n = noun_of[t["head"]]
    start = t["head"].index(" " + n) + 1
    c = PLACES[n][k % len(PLACES[n])]
    head_c = t["head"][:start] + c + t["head"][start + len(n):]
    p = [0.91, 0.5, 0.99, 0.9, 0.93][k % 5]
    label = "annotated" if k % 4 == 0 else "pseudo"
    abstracts.append({"source_head": t["head"], "relation": t["relation"], "tail": t["tail"],
                      "start": start, "end": start + len(n), "concept": c, "plausibility": p,
                      "head_c": head_c, "instance": n, "label": label})

def dump(name, rows):
    with open(name, "w") as f:
        for r in rows:
            f.write(json.dumps(r) + "\n")

dump("triples.jsonl", triples)
dump("concepts.jsonl", concepts)
dump("abstracts.jsonl", abstracts)

T = 0.9
kept_c = [c for c in concepts if c["plausibility"] >= T]
kept_a = [a for a in abstracts if a["plausibility"] >= T]

def inst(c):
    return norm(c["head"][c["start"]:c["end"]])

ev_pairs = {(c["head"], norm(c["concept"])) for c in kept_c}
in_pairs = {(inst(c), norm(c["concept"])) for c in kept_c}
c_events = {c["head"] for c in kept_c}
instances = {inst(c) for c in kept_c}
per_rel = {r: 0 for r in RELS}
for t in triples:
    per_rel[t["relation"]] += 1
abs_rel = {r: [0, 0] for r in RELS}
for a in kept_a:
    abs_rel[a["relation"]][0 if a["label"] == "annotated" else 1] += 1

expected = {
    "triples_per_relation": per_rel,
    "total_triples": len(triples),
    "unique_events": len({t["head"] for t in triples}),
    "concept_events": len(c_events),
    "unique_instances": len(instances),
    "unique_concepts": len({norm(c["concept"]) for c in kept_c}),
    "event_concept_pairs": len(ev_pairs),
    "instance_concept_pairs": len(in_pairs),
    "abstract_annotated": sum(1 for a in kept_a if a["label"] == "annotated"),
    "abstract_pseudo": sum(1 for a in kept_a if a["label"] == "pseudo"),
    "abstract_per_relation": abs_rel,
    "avg_concepts_per_event": len(ev_pairs) / len(c_events),
    "avg_concepts_per_instance": len(in_pairs) / len(instances),
    "concepts_filtered": len(concepts) - len(kept_c),
    "abstracts_filtered": len(abstracts) - len(kept_a),
}
with open("expected.json", "w") as f:
    json.dump(expected, f, indent=2)
    f.write("\n")
