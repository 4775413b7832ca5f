"""Deterministic synthetic forum corpus for demos and end-to-end tests.

Four themes with mostly disjoint content vocabularies so a small-K LDA run
separates them cleanly; the theme words line up with the bundled question
templates (afraid/hallucinations, stop/drinking, food/weight, family).
"""

from __future__ import annotations

import datetime as dt
import random

from .ingest import RawPost, pseudonymize

_THEMES = [
    {
        "name": "fear",
        "sentences": [
            "I am afraid of the {n1} again tonight.",
            "The hallucinations show me {n2} everywhere.",
            "My memory gets foggy when the voices start.",
            "I stay inside because the {n1} frighten me.",
            "Last night the hallucinations were full of {n2}.",
            "Being afraid of the {n1} ruins my sleep.",
        ],
        "n1": ["voices", "shadows", "whispers", "noises"],
        "n2": ["demons", "spiders", "strangers", "faces"],
    },
    {
        "name": "habits",
        "sentences": [
            "I stopped drinking {n1} last {n2}.",
            "My doctor said to stop the {n1} completely.",
            "Quitting nicotine was harder than quitting {n1}.",
            "I drink less {n1} since the new medication.",
            "Smoking went first, then I stopped the {n1} too.",
        ],
        "n1": ["coffee", "cola", "beer", "caffeine"],
        "n2": ["winter", "spring", "year", "month"],
    },
    {
        "name": "body",
        "sentences": [
            "The {n1} struggle never ends for me.",
            "I gained weight from the {n2} again.",
            "Eating healthy food feels impossible some weeks.",
            "My weight worries me more than the {n1}.",
            "Cooking simple food helps me struggle less.",
        ],
        "n1": ["appetite", "exercise", "routine", "diet"],
        "n2": ["medication", "risperidone", "olanzapine", "snacking"],
    },
    {
        "name": "support",
        "sentences": [
            "My family visits every {n1} and it helps.",
            "Society treats us badly during the pandemic.",
            "Friends from this forum keep me suffering less.",
            "The pandemic cut me off from my {n2}.",
            "Talking with family makes the suffering lighter.",
        ],
        "n1": ["weekend", "sunday", "tuesday", "morning"],
        "n2": ["family", "neighbours", "support group", "sister"],
    },
]

_USERNAMES = [
    "quietriver", "bluelantern", "northwind", "paperboat", "greyowl",
    "mosspath", "ironfern", "stillwater", "lateharvest", "cinderfox",
]


def generate_posts(n_posts: int = 200, seed: int = 7) -> list[RawPost]:
    rng = random.Random(seed)
    start = dt.date(2020, 1, 1)
    posts = []
    for i in range(n_posts):
        theme = _THEMES[i % len(_THEMES)]
        n_sentences = rng.randint(2, 4)
        body_sentences = []
        for _ in range(n_sentences):
            template = rng.choice(theme["sentences"])
            body_sentences.append(
                template.format(
                    n1=rng.choice(theme["n1"]), n2=rng.choice(theme["n2"])
                )
            )
        username = rng.choice(_USERNAMES)
        posts.append(
            RawPost(
                post_id=f"post-{i:04d}",
                posted_at=start + dt.timedelta(days=rng.randint(0, 700)),
                author_ref=pseudonymize(username),
                body=" ".join(body_sentences),
            )
        )
    return posts


def generate_corpus_jsonl(n_posts: int = 200, seed: int = 7) -> str:
    return "".join(p.to_json() + "\n" for p in generate_posts(n_posts, seed))


def two_cluster_posts(
    n_posts: int = 60, tokens_per_post: int = 20, seed: int = 3
) -> tuple[list[RawPost], dict[str, int]]:
    """Two clusters with fully disjoint vocabularies; returns (posts,
    post_id -> true cluster) for purity checks."""
    vocab_a = ["storm", "thunder", "lightning", "rain", "cloud", "wind"]
    vocab_b = ["garden", "flower", "seed", "soil", "bloom", "petal"]
    rng = random.Random(seed)
    posts = []
    truth = {}
    for i in range(n_posts):
        cluster = i % 2
        vocab = vocab_a if cluster == 0 else vocab_b
        tokens = [rng.choice(vocab) for _ in range(tokens_per_post)]
        posts.append(
            RawPost(
                post_id=f"c{cluster}-{i:03d}",
                posted_at=dt.date(2021, 1, 1) + dt.timedelta(days=i),
                author_ref=pseudonymize(f"user{i % 7}"),
                body=" ".join(tokens).capitalize() + ".",
            )
        )
        truth[posts[-1].post_id] = cluster
    return posts, truth
