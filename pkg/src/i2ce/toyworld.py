"""A small synthetic captioning world for desk-scale experiments.

Scenes are (subject, action, place, object, colour, size) tuples. Captions
render a scene through one of several templates, picking freely between
synonyms, so reference sets look like five annotators describing one image.
Simulated captioning models describe the same scene but make mistakes at a
rate set by their quality. Everything is driven by a seeded generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# canonical word -> synonym. Annotators and simulated models mostly use the
# canonical word; general text uses both equally.
SYNONYMS = {
    "cat": "kitten", "dog": "puppy", "man": "guy", "woman": "lady", "child": "kid",
    "horse": "pony", "sleeping": "napping", "sitting": "resting", "running": "racing",
    "jumping": "leaping", "holding": "carrying", "walking": "strolling", "eating": "munching",
    "couch": "sofa", "field": "meadow", "grass": "lawn", "street": "road", "beach": "shore",
    "bike": "bicycle", "bag": "purse", "phone": "cellphone", "large": "big", "small": "little",
    "picture": "photo", "stone": "rock",
}

SCENES = {
    "cat": dict(actions=["sleeping", "sitting", "lying"], places=["couch", "bed", "windowsill"],
                objects=["blanket", "pillow", "laptop"], colours=["black", "white", "orange", "gray"]),
    "dog": dict(actions=["running", "playing", "jumping"], places=["park", "field", "grass"],
                objects=["frisbee", "ball", "stick"], colours=["brown", "black", "white"]),
    "man": dict(actions=["riding", "holding", "standing"], places=["street", "beach", "sidewalk"],
                objects=["bike", "surfboard", "skateboard"], colours=["tall", "young", "old"]),
    "woman": dict(actions=["holding", "walking", "standing"], places=["market", "kitchen", "street"],
                  objects=["umbrella", "bag", "phone"], colours=["young", "old", "smiling"]),
    "child": dict(actions=["eating", "playing", "sitting"], places=["table", "kitchen", "park"],
                  objects=["cake", "pizza", "kite"], colours=["young", "happy", "smiling"]),
    "horse": dict(actions=["grazing", "standing", "running"], places=["field", "farm", "pasture"],
                  objects=["fence", "barn", "stone"], colours=["brown", "white", "black"]),
}

TEMPLATES = [
    "a {size} {colour} {subject} is {action} on the {place}",
    "the {subject} is {action} near a {object}",
    "a {subject} {action} in the {place} with a {object}",
    "there is a {colour} {subject} {action} on a {place}",
    "a {size} {subject} {action} next to the {object} on the {place}",
    "{colour} {subject} {action} by the {object} in the {place}",
    "a {picture} of a {subject} {action} at the {place}",
]

GENERIC_TEMPLATES = [
    "there is a {colour} {object} in the {place}",
    "a {subject} and a {object} are in the {place}",
    "the {object} is on the {place} next to the {subject}",
    "look at the {size} {subject} {action} over there",
    "a {picture} of the {place} was on the wall",
    "the {colour} {subject} was {action} all day",
    "i saw a {subject} at the {place} yesterday",
    "my friend has a {colour} {object} at home",
    "we walked to the {place} in the morning",
    "she bought a {size} {object} at the market",
    "the weather was nice so we stayed at the {place}",
    "he told me that the {subject} was very {colour}",
    "do you want to go to the {place} with me",
    "they found an old {object} near the {place}",
    "it is not easy to take a good {picture} of a {subject}",
    "my brother likes to play with his {object}",
]

SIZES = ["large", "small"]

MODEL_QUALITIES = {
    "show-tell": 0.45, "top-down": 0.6, "att2in": 0.55, "top-down+": 0.75, "att2in+": 0.7,
}


@dataclass(frozen=True)
class Scene:
    subject: str
    action: str
    place: str
    object: str
    colour: str
    size: str


def _pick(rng, options):
    return options[int(rng.integers(len(options)))]


def random_scene(rng) -> Scene:
    subject = _pick(rng, sorted(SCENES))
    s = SCENES[subject]
    return Scene(subject, _pick(rng, s["actions"]), _pick(rng, s["places"]),
                 _pick(rng, s["objects"]), _pick(rng, s["colours"]), _pick(rng, SIZES))


def _surface(word: str, rng, synonym_rate: float = 0.5) -> str:
    if word in SYNONYMS and rng.random() < synonym_rate:
        return SYNONYMS[word]
    return word


def render(scene: Scene, template: str, rng, synonym_rate: float = 0.5) -> str:
    fields = {k: _surface(getattr(scene, k), rng, synonym_rate)
              for k in ("subject", "action", "place", "object", "colour", "size")}
    fields["picture"] = _surface("picture", rng, synonym_rate)
    return template.format(**fields)


CAPTION_SYNONYM_RATE = 0.15


def references(scene: Scene, rng, n: int = 5, synonym_rate: float = CAPTION_SYNONYM_RATE) -> list[str]:
    idx = rng.choice(len(TEMPLATES), size=n, replace=False)
    return [render(scene, TEMPLATES[i], rng, synonym_rate) for i in idx]


def _mistake(scene: Scene, rng) -> Scene:
    """Swap one slot for a plausible but wrong value."""
    s = SCENES[scene.subject]
    slot = _pick(rng, ["action", "place", "object", "subject"])
    if slot == "subject":
        other = _pick(rng, [x for x in sorted(SCENES) if x != scene.subject])
        return Scene(other, scene.action, scene.place, scene.object, scene.colour, scene.size)
    key = {"action": "actions", "place": "places", "object": "objects"}[slot]
    options = [x for x in s[key] if x != getattr(scene, slot)]
    return Scene(**{**scene.__dict__, slot: _pick(rng, options)})


def model_caption(scene: Scene, quality: float, rng) -> str:
    """A simulated model's caption; lower quality means more slot errors and
    more generic phrasing."""
    for _ in range(2):
        if rng.random() > quality:
            scene = _mistake(scene, rng)
    if rng.random() > quality:
        return render(scene, "a {subject} is {action}", rng, CAPTION_SYNONYM_RATE)
    return render(scene, _pick(rng, TEMPLATES), rng, CAPTION_SYNONYM_RATE)


def make_items(n_items: int, seed: int, qualities: dict[str, float] | None = None):
    """Items shared by every simulated model: list of
    (item_id, scene, references) plus {model: [candidate per item]}."""
    rng = np.random.default_rng(seed)
    items = []
    for k in range(n_items):
        scene = random_scene(rng)
        items.append((f"img{k:04d}", scene, references(scene, rng)))
    candidates = {}
    for name, q in (qualities or MODEL_QUALITIES).items():
        mrng = np.random.default_rng([seed, sum(map(ord, name))])
        candidates[name] = [model_caption(scene, q, mrng) for _, scene, _ in items]
    return items, candidates


def dataset_records(n_items: int = 40, seed: int = 7, model: str = "top-down+") -> list[dict]:
    """jsonl-style records ``{id, candidate, references}`` for one model."""
    items, candidates = make_items(n_items, seed)
    return [{"id": item_id, "candidate": cand, "references": refs}
            for (item_id, _, refs), cand in zip(items, candidates[model])]


def caption_corpus(n_scenes: int, seed: int, synonym_rate: float = CAPTION_SYNONYM_RATE) -> list[str]:
    """Reference-style captions (five per scene)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_scenes):
        out.extend(references(random_scene(rng), rng, synonym_rate=synonym_rate))
    return out


def _mixed_scene(rng) -> Scene:
    """Slots drawn independently from every scene type."""
    pool = {k: sorted({w for s in SCENES.values() for w in s[k]})
            for k in ("actions", "places", "objects", "colours")}
    return Scene(_pick(rng, sorted(SCENES)), _pick(rng, pool["actions"]), _pick(rng, pool["places"]),
                 _pick(rng, pool["objects"]), _pick(rng, pool["colours"]), _pick(rng, SIZES))


def generic_corpus(n: int, seed: int) -> list[str]:
    """Plain sentences sharing vocabulary with the captions but not their
    style; slot fillers are mixed freely across scene types."""
    rng = np.random.default_rng(seed)
    return [render(_mixed_scene(rng), _pick(rng, GENERIC_TEMPLATES), rng) for _ in range(n)]


def synonym_table() -> dict[str, str]:
    return dict(SYNONYMS)


def write_fixtures(directory: str | Path, n_items: int = 40, seed: int = 7) -> Path:
    """Write one jsonl file per simulated model plus the training corpora."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    items, candidates = make_items(n_items, seed)
    for name, cands in candidates.items():
        with open(directory / f"{name}.jsonl", "w", encoding="utf-8") as fh:
            for (item_id, _, refs), cand in zip(items, cands):
                fh.write(json.dumps({"id": item_id, "candidate": cand, "references": refs}) + "\n")
    (directory / "captions.txt").write_text("\n".join(caption_corpus(60, seed + 1)) + "\n")
    (directory / "generic.txt").write_text("\n".join(generic_corpus(400, seed + 2)) + "\n")
    return directory


# --------------------------------------------------------------------------
# the desk setup used by the demos and the acceptance suite


def desk_embeddings(seed: int = 0):
    """Skip-gram vectors (d=32) trained on toy captions plus generic text."""
    from .embeddings import SkipGramConfig, train_skipgram
    from .text import tokenize

    text = caption_corpus(800, 11, synonym_rate=0.5) + generic_corpus(1000, 12)
    cfg = SkipGramConfig(dim=32, window=3, negatives=5, epochs=5, lr=0.05, seed=seed)
    return train_skipgram([tokenize(s) for s in text], cfg)


def desk_training_plan(checkpoint_dir=None):
    """Generic sentences first, then 200 captions; Adam with a decaying rate."""
    from .metric import TrainingPlan
    from .neural import ModelConfig, TrainConfig
    from .text import tokenize

    return TrainingPlan(
        stage1_corpus=[tokenize(s) for s in generic_corpus(800, 22)],
        stage2_corpus=[tokenize(s) for s in caption_corpus(40, 21)],
        stage1=TrainConfig(epochs=10, lr=0.01, optimizer="adam", batch_size=16, seed=1),
        stage2=TrainConfig(epochs=100, lr=0.01, optimizer="adam", batch_size=16, seed=2,
                           lr_decay=0.97),
        model=ModelConfig(hidden=64, attn=32),
        min_count=1,
        checkpoint_dir=checkpoint_dir,
    )
