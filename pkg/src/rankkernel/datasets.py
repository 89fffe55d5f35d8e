"""Reading and writing ranking datasets.

Two formats are supported:

rankings-text   one partial ranking per line in the block syntax
                ("3>1,2>4", "1>2|rest"), preceded by a header line
                "n=<degree>". An optional label follows the ranking: after
                the "|rest" marker as ",label", or as a trailing
                comma-separated token that does not parse as an integer.

csv-permutations  each row lists a full permutation of 1..n, optionally
                followed by one extra field used as the label. A row whose
                fields all parse to a valid permutation is taken as
                unlabeled; otherwise the last field is the label. Full
                permutations load as chains of singleton blocks, so every
                estimator treats them exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .partial import PartialRanking, from_string, to_string, top_k_ranking


@dataclass(frozen=True)
class RankingDataset:
    degree: int
    records: tuple[tuple[PartialRanking, str | None], ...]

    def __post_init__(self):
        for ranking, _ in self.records:
            if ranking.degree != self.degree:
                raise ValueError(
                    f"record degree {ranking.degree} does not match dataset degree {self.degree}"
                )

    @property
    def rankings(self) -> list[PartialRanking]:
        return [r for r, _ in self.records]

    @property
    def labels(self) -> list[str | None]:
        return [lab for _, lab in self.records]

    def __len__(self) -> int:
        return len(self.records)


def _split_label(line: str) -> tuple[str, str | None]:
    if "|" in line:
        body, _, marker = line.partition("|")
        marker = marker.strip()
        if "," in marker:
            marker, _, label = marker.partition(",")
            return f"{body}|{marker.strip()}", label.strip()
        return line, None
    head, _, tail = line.rpartition(",")
    if head and tail and ">" not in tail:
        try:
            int(tail)
        except ValueError:
            return head, tail.strip()
    return line, None


def parse_rankings_text(text: str) -> RankingDataset:
    lines = text.splitlines()
    degree: int | None = None
    records: list[tuple[PartialRanking, str | None]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if degree is None:
            if not line.startswith("n="):
                raise ValueError(f"line {lineno}: expected header 'n=<degree>', got {line!r}")
            try:
                degree = int(line[2:])
            except ValueError:
                raise ValueError(f"line {lineno}: bad degree in header {line!r}")
            continue
        body, label = _split_label(line)
        try:
            ranking = from_string(body, degree)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        records.append((ranking, label))
    if degree is None:
        raise ValueError("missing 'n=<degree>' header line")
    return RankingDataset(degree, tuple(records))


def serialize_rankings_text(dataset: RankingDataset) -> str:
    lines = [f"n={dataset.degree}"]
    for ranking, label in dataset.records:
        body = to_string(ranking)
        lines.append(body if label is None else f"{body},{label}")
    return "\n".join(lines) + "\n"


def _try_permutation(fields: list[str]) -> tuple[int, ...] | None:
    try:
        values = tuple(int(f) for f in fields)
    except ValueError:
        return None
    if sorted(values) != list(range(1, len(values) + 1)):
        return None
    return values


def parse_csv_permutations(text: str) -> RankingDataset:
    records: list[tuple[PartialRanking, str | None]] = []
    degree: int | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        word = _try_permutation(fields)
        label: str | None = None
        if word is None and len(fields) >= 2:
            word = _try_permutation(fields[:-1])
            label = fields[-1]
        if word is None:
            raise ValueError(f"line {lineno}: not a permutation row: {line!r}")
        if degree is None:
            degree = len(word)
        elif len(word) != degree:
            raise ValueError(f"line {lineno}: degree {len(word)} does not match {degree}")
        records.append((top_k_ranking(word, degree), label))
    if degree is None:
        raise ValueError("no permutation rows found")
    return RankingDataset(degree, tuple(records))


def serialize_csv_permutations(dataset: RankingDataset) -> str:
    lines = []
    for ranking, label in dataset.records:
        if ranking.num_ranked != dataset.degree or not ranking.is_top_k:
            raise ValueError("csv-permutations requires full rankings")
        word = ranking.top_k_items()
        rest = tuple(x for b in ranking.blocks[len(word) :] for x in b)
        fields = [str(x) for x in word + rest]
        if label is not None:
            fields.append(label)
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


FORMATS = ("rankings-text", "csv-permutations")


def parse_dataset(path: str | Path, fmt: str) -> RankingDataset:
    text = Path(path).read_text()
    if fmt == "rankings-text":
        return parse_rankings_text(text)
    if fmt == "csv-permutations":
        return parse_csv_permutations(text)
    raise ValueError(f"unknown dataset format {fmt!r}; choose from {FORMATS}")


def write_dataset(dataset: RankingDataset, path: str | Path, fmt: str) -> None:
    if fmt == "rankings-text":
        Path(path).write_text(serialize_rankings_text(dataset))
    elif fmt == "csv-permutations":
        Path(path).write_text(serialize_csv_permutations(dataset))
    else:
        raise ValueError(f"unknown dataset format {fmt!r}; choose from {FORMATS}")
