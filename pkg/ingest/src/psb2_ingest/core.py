"""Convert the PSB2 benchmark dataset into the engine's JSON corpus.

One output file per problem, holding the task statement plus three pair
sets: prompt and validation pairs sampled disjointly from the dataset's
training split, test pairs taken from its test split. Every value is
kept exactly as the dataset renders it in competitive (stdin/stdout)
form, so the emitted lines are the scoring contract.
"""

from __future__ import annotations

import hashlib
import inspect
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .problems import PROBLEM_DESCRIPTIONS, PROBLEM_NAMES

# A fetcher returns (train, test) lists of (input_text, output_text)
# tuples, where multi-value inputs and outputs are newline-joined.
RawPair = tuple[str, str]
Fetcher = Callable[[str, int, int, int], tuple[Sequence[RawPair], Sequence[RawPair]]]

DEFAULT_CACHE_DIR = Path.home() / ".cache" / "psb2-ingest"


class IngestError(Exception):
    """The conversion could not complete."""


class PartialIngestError(IngestError):
    """Some problems failed; files for the others are already on disk."""

    def __init__(self, message: str, written: list[Path], failures: list[str]):
        super().__init__(message)
        self.written = written
        self.failures = failures


@dataclass(frozen=True)
class IngestSpec:
    """Where the corpus goes and how many pairs each set gets."""

    output_dir: Path
    prompt_n: int = 5
    validation_n: int = 100
    test_n: int = 2000
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("prompt_n", "validation_n", "test_n"):
            value = getattr(self, name)
            if value < 1:
                raise IngestError(f"{name} must be at least 1, got {value}")
        object.__setattr__(self, "output_dir", Path(self.output_dir))


def make_psb2_fetcher(cache_dir: Path | str = DEFAULT_CACHE_DIR) -> Fetcher:
    """Fetcher backed by the psb2 package, downloading into cache_dir.

    The package is imported lazily so that offline workflows (and tests,
    which inject their own fetcher) never require it.
    """
    try:
        import psb2
    except ImportError as exc:
        raise IngestError(
            "the psb2 package is required to download the dataset;"
            " install it with: pip install 'psb2-ingest[psb2]'"
        ) from exc

    takes_seed = "seed" in inspect.signature(psb2.fetch_examples).parameters

    def fetch(name: str, n_train: int, n_test: int, seed: int):
        kwargs = {"format": "competitive"}
        if takes_seed:
            kwargs["seed"] = seed
        # Older package versions sample with the global generator.
        random.seed(seed)
        train, test = psb2.fetch_examples(
            str(cache_dir), name, n_train, n_test, **kwargs
        )
        return list(train), list(test)

    return fetch


def _derived_seed(seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def _text_to_lines(text: str) -> list[str]:
    # One trailing newline is a terminator, not an empty value line.
    if text.endswith("\n"):
        text = text[:-1]
    return text.split("\n")


def _pair_to_json(pair: RawPair) -> list[list[str]]:
    input_text, output_text = pair
    return [_text_to_lines(input_text), _text_to_lines(output_text)]


def _pair_key(pair: RawPair) -> tuple[tuple[str, ...], tuple[str, ...]]:
    return (tuple(_text_to_lines(pair[0])), tuple(_text_to_lines(pair[1])))


def convert_problem(
    name: str,
    spec: IngestSpec,
    train: Sequence[RawPair],
    test: Sequence[RawPair],
) -> dict:
    """Build one problem's corpus JSON from fetched raw pairs.

    The three sets must be pairwise disjoint by value for the corpus to
    validate, so the fetched training sample is shuffled with a
    per-problem generator derived from (seed, name), the prompt set takes
    the first occurrences, the validation set fills from the rest
    skipping any value already in the prompt set, and test pairs are
    taken in fetched order skipping values used by either. Callers fetch
    a little more than the target counts to survive those skips.
    """
    rng = random.Random(f"{spec.seed}:{name}")
    order = list(range(len(train)))
    rng.shuffle(order)
    shuffled = [train[i] for i in order]

    prompt = shuffled[: spec.prompt_n]
    if len(prompt) < spec.prompt_n:
        raise IngestError(
            f"{name}: only {len(train)} training examples for a prompt set"
            f" of {spec.prompt_n}"
        )
    taken = {_pair_key(p) for p in prompt}

    validation: list[RawPair] = []
    for pair in shuffled[spec.prompt_n :]:
        if _pair_key(pair) in taken:
            continue
        validation.append(pair)
        if len(validation) == spec.validation_n:
            break
    if len(validation) < spec.validation_n:
        raise IngestError(
            f"{name}: training sample too small for {spec.validation_n}"
            " validation pairs distinct from the prompt set"
        )
    taken |= {_pair_key(p) for p in validation}

    test_pairs: list[RawPair] = []
    for pair in test:
        if _pair_key(pair) in taken:
            continue
        test_pairs.append(pair)
        if len(test_pairs) == spec.test_n:
            break
    if len(test_pairs) < spec.test_n:
        raise IngestError(
            f"{name}: test sample too small for {spec.test_n} pairs distinct"
            " from the prompt and validation sets"
        )

    return {
        "id": name,
        "description": PROBLEM_DESCRIPTIONS[name],
        "pairs": {
            "prompt": [_pair_to_json(p) for p in prompt],
            "validation": [_pair_to_json(p) for p in validation],
            "test": [_pair_to_json(p) for p in test_pairs],
        },
    }


def ingest(
    spec: IngestSpec,
    fetch: Fetcher | None = None,
    problems: Sequence[str] | None = None,
    progress: Callable[[str], None] | None = None,
) -> list[Path]:
    """Write one corpus file per problem; return the written paths.

    Problems that fail to fetch are reported together at the end, after
    every other problem has been attempted, so a flaky download leaves
    the rest of the corpus usable on disk.
    """
    names = tuple(problems) if problems is not None else PROBLEM_NAMES
    unknown = [n for n in names if n not in PROBLEM_DESCRIPTIONS]
    if unknown:
        raise IngestError(f"unknown problems: {', '.join(sorted(unknown))}")
    if fetch is None:
        fetch = make_psb2_fetcher()

    out = spec.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IngestError(f"cannot create output directory {out}: {exc}") from exc

    # Over-fetch so cross-set duplicate skips still leave exact counts.
    wanted_train = spec.prompt_n + spec.validation_n
    train_request = wanted_train + max(32, wanted_train // 4)
    test_request = spec.test_n + max(32, spec.test_n // 4)

    written: list[Path] = []
    failures: list[str] = []
    for name in names:
        try:
            train, test = fetch(
                name,
                train_request,
                test_request,
                _derived_seed(spec.seed, name),
            )
            payload = convert_problem(name, spec, train, test)
        except IngestError as exc:
            failures.append(str(exc))
            continue
        except Exception as exc:
            failures.append(f"{name}: {exc}")
            continue
        path = out / f"{name}.json"
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        written.append(path)
        if progress is not None:
            progress(
                f"wrote {path} ({spec.prompt_n}/{spec.validation_n}/{spec.test_n})"
            )

    if failures:
        raise PartialIngestError(
            f"{len(failures)} of {len(names)} problems failed:\n  "
            + "\n  ".join(failures),
            written,
            failures,
        )
    return written
