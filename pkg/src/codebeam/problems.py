"""Task data model: I/O pairs, problems, language profiles, and the corpus loader.

A problem is a natural-language description plus named sets of I/O example
pairs.  The prompt set is shown to the draft model, the validation set drives
in-loop scoring and repair instructions, and the (optional) test set is held
out for final evaluation.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CorpusError, ProfileError, SplitSizeError

DRAFT_PLACEHOLDERS = ("{description}", "{io_examples}")


def _normalize_line(line: str, where: str) -> str:
    """Normalize CRLF to LF artifacts and reject embedded line terminators."""
    if line.endswith("\r"):
        line = line[:-1]
    if "\n" in line or "\r" in line:
        raise CorpusError(f"{where}: line contains an embedded line terminator: {line!r}")
    return line


@dataclass(frozen=True)
class IOPair:
    """One example: the lines fed to stdin and the lines expected on stdout."""

    input: tuple[str, ...]
    output: tuple[str, ...]

    def key(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return (self.input, self.output)


@dataclass(frozen=True)
class Problem:
    """A programming task with its example pairs split into three sets."""

    id: str
    description: str
    prompt_set: tuple[IOPair, ...]
    validation_set: tuple[IOPair, ...]
    test_set: tuple[IOPair, ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("problem id must be non-empty")
        if not self.prompt_set:
            raise CorpusError(f"problem {self.id}: prompt set must be non-empty")
        if not self.validation_set:
            raise CorpusError(f"problem {self.id}: validation set must be non-empty")
        sets = {
            "prompt": self.prompt_set,
            "validation": self.validation_set,
            "test": self.test_set,
        }
        names = list(sets)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                overlap = {p.key() for p in sets[a]} & {p.key() for p in sets[b]}
                if overlap:
                    raise CorpusError(
                        f"problem {self.id}: sets '{a}' and '{b}' share "
                        f"{len(overlap)} identical pair(s)"
                    )


@dataclass(frozen=True)
class LanguageProfile:
    """How to materialize, build, and run a candidate in one target language.

    Commands are whitespace-split templates over the placeholders {src},
    {bin}, and {workdir}.  The draft template must contain {description} and
    {io_examples} exactly once each; it is the seed text handed to the draft
    model.
    """

    name: str
    file_extension: str
    run_command: str
    draft_template: str
    compile_command: str | None = None

    def __post_init__(self) -> None:
        if not self.run_command.strip():
            raise ProfileError(f"profile {self.name}: run_command must be non-empty")
        for placeholder in DRAFT_PLACEHOLDERS:
            count = self.draft_template.count(placeholder)
            if count != 1:
                raise ProfileError(
                    f"profile {self.name}: draft_template must contain {placeholder} "
                    f"exactly once (found {count})"
                )

    @property
    def compiled(self) -> bool:
        return self.compile_command is not None


def _pairs_from_json(raw: object, where: str) -> tuple[IOPair, ...]:
    if not isinstance(raw, list):
        raise CorpusError(f"{where}: expected a list of [input-lines, output-lines] pairs")
    pairs = []
    for i, entry in enumerate(raw):
        if not (isinstance(entry, list) and len(entry) == 2):
            raise CorpusError(f"{where}[{i}]: expected a two-element [input, output] list")
        sides = []
        for side_name, side in zip(("input", "output"), entry):
            if not (isinstance(side, list) and all(isinstance(s, str) for s in side)):
                raise CorpusError(f"{where}[{i}].{side_name}: expected a list of strings")
            sides.append(tuple(_normalize_line(s, f"{where}[{i}].{side_name}") for s in side))
        pairs.append(IOPair(input=sides[0], output=sides[1]))
    return tuple(pairs)


def problem_from_dict(data: object, where: str = "problem") -> Problem:
    """Build a validated Problem from parsed corpus JSON."""
    if not isinstance(data, dict):
        raise CorpusError(f"{where}: top level must be a JSON object")
    for field_name, kind in (("id", str), ("description", str), ("pairs", dict)):
        if not isinstance(data.get(field_name), kind):
            raise CorpusError(f"{where}: field '{field_name}' missing or not a {kind.__name__}")
    pairs = data["pairs"]
    for required in ("prompt", "validation"):
        if required not in pairs:
            raise CorpusError(f"{where}: field 'pairs.{required}' is required")
    return Problem(
        id=data["id"],
        description=data["description"],
        prompt_set=_pairs_from_json(pairs["prompt"], f"{where}: pairs.prompt"),
        validation_set=_pairs_from_json(pairs["validation"], f"{where}: pairs.validation"),
        test_set=_pairs_from_json(pairs.get("test", []), f"{where}: pairs.test"),
    )


def problem_to_dict(problem: Problem) -> dict:
    def render(pairs: Iterable[IOPair]) -> list:
        return [[list(p.input), list(p.output)] for p in pairs]

    return {
        "id": problem.id,
        "description": problem.description,
        "pairs": {
            "prompt": render(problem.prompt_set),
            "validation": render(problem.validation_set),
            "test": render(problem.test_set),
        },
    }


def load_bundled_problem(problem_id: str) -> Problem:
    """Load one of the sample problems shipped with the package."""
    ref = resources.files("codebeam").joinpath(f"data/problems/{problem_id}.json")
    try:
        text = ref.read_text("utf-8")
    except FileNotFoundError as exc:
        raise CorpusError(f"no bundled problem named {problem_id!r}") from exc
    return problem_from_dict(json.loads(text), f"bundled problem {problem_id}")


def load_problem_file(path: Path | str) -> Problem:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CorpusError(f"{path}: cannot read problem file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: invalid JSON: {exc}") from exc
    return problem_from_dict(data, where=str(path))


def load_corpus(path: Path | str) -> list[Problem]:
    """Load every *.json problem file under a directory, sorted by filename.

    Raises CorpusError on the first malformed file (the message names the
    file and offending field) or on duplicate problem ids.
    """
    path = Path(path)
    if not path.is_dir():
        raise CorpusError(f"{path}: corpus path is not a directory")
    problems: list[Problem] = []
    seen: dict[str, Path] = {}
    for file in sorted(path.glob("*.json")):
        problem = load_problem_file(file)
        if problem.id in seen:
            raise CorpusError(
                f"{file}: duplicate problem id '{problem.id}' (already in {seen[problem.id]})"
            )
        seen[problem.id] = file
        problems.append(problem)
    return problems


def split_examples(
    pairs: Sequence[IOPair],
    prompt_n: int,
    validation_n: int,
    seed: int,
) -> tuple[tuple[IOPair, ...], tuple[IOPair, ...]]:
    """Draw disjoint prompt and validation sets from a pool of pairs.

    Deterministic for a fixed seed.  Disjointness is by pair value, not just
    position, so a pool containing duplicate pairs can never leak the same
    pair into both sets.
    """
    if prompt_n < 1 or validation_n < 1:
        raise SplitSizeError(
            f"prompt_n and validation_n must be >= 1 (got {prompt_n}, {validation_n})"
        )
    if prompt_n + validation_n > len(pairs):
        raise SplitSizeError(
            f"need {prompt_n + validation_n} pairs but only {len(pairs)} available"
        )
    order = list(range(len(pairs)))
    random.Random(seed).shuffle(order)
    prompt = [pairs[i] for i in order[:prompt_n]]
    prompt_keys = {p.key() for p in prompt}
    validation: list[IOPair] = []
    for i in order[prompt_n:]:
        if len(validation) == validation_n:
            break
        if pairs[i].key() in prompt_keys:
            continue
        validation.append(pairs[i])
    if len(validation) < validation_n:
        raise SplitSizeError(
            f"could not draw {validation_n} validation pairs disjoint from the prompt set"
        )
    return tuple(prompt), tuple(validation)


def profile_from_dict(name: str, data: object) -> LanguageProfile:
    if not isinstance(data, dict):
        raise ProfileError(f"profile {name}: expected a JSON object")
    for field_name in ("file_extension", "run_command", "draft_template"):
        if not isinstance(data.get(field_name), str):
            raise ProfileError(f"profile {name}: field '{field_name}' missing or not a string")
    compile_command = data.get("compile_command")
    if compile_command is not None and not isinstance(compile_command, str):
        raise ProfileError(f"profile {name}: field 'compile_command' must be a string")
    return LanguageProfile(
        name=name,
        file_extension=data["file_extension"],
        run_command=data["run_command"],
        draft_template=data["draft_template"],
        compile_command=compile_command,
    )


def load_profiles(path: Path | str | None = None) -> dict[str, LanguageProfile]:
    """Load language profiles keyed by language name.

    Without a path, the profiles bundled with the package are used.
    """
    if path is None:
        text = resources.files("codebeam").joinpath("data/profiles.json").read_text("utf-8")
        where = "builtin profiles"
    else:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ProfileError(f"{path}: cannot read profiles file: {exc}") from exc
        where = str(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"{where}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ProfileError(f"{where}: top level must be an object keyed by language name")
    return {name: profile_from_dict(name, entry) for name, entry in data.items()}
