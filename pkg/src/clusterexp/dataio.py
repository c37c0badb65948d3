"""Bid-log parsing, bipartite graph construction, and a calibrated
synthetic dataset generator.

The log format is one whitespace-separated record per line:

    day account_id rank keyphrase bid impressions clicks

where keyphrase is a comma-joined token list and bid is in units of 1/100
cent. Bid units are preserved internally; converting to cents happens only
at report boundaries.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, fields, replace
from typing import Iterable

import numpy as np

from .partitioning import BipartiteGraph

__all__ = [
    "BidRecord",
    "ParseError",
    "ParseResult",
    "GeneratorParams",
    "parse_records",
    "format_records",
    "build_bipartite_graph",
    "generate_synthetic_dataset",
    "summarize_records",
]


@dataclass(frozen=True)
class BidRecord:
    day: int
    account_id: str
    rank: int
    keyphrase: str
    bid: float
    impressions: float
    clicks: float

    def __post_init__(self):
        if self.day < 1:
            raise ValueError("day must be >= 1")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        for name in ("bid", "impressions", "clicks"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        # clicks > impressions is tolerated: real logs occasionally have it


@dataclass(frozen=True)
class ParseError:
    line_no: int
    message: str
    raw: str


@dataclass(frozen=True)
class ParseResult:
    records: list[BidRecord]
    errors: list[ParseError]


def parse_records(stream) -> ParseResult:
    """Parse a log stream (file object or string). Malformed lines are
    collected with their line numbers; parsing continues past them."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    records: list[BidRecord] = []
    errors: list[ParseError] = []
    for line_no, line in enumerate(stream, start=1):
        raw = line.rstrip("\n")
        if not raw.strip():
            continue
        cols = raw.split()
        if len(cols) != 7:
            errors.append(ParseError(line_no, f"expected 7 columns, got {len(cols)}", raw))
            continue
        try:
            record = BidRecord(
                day=int(cols[0]),
                account_id=cols[1],
                rank=int(cols[2]),
                keyphrase=cols[3],
                bid=float(cols[4]),
                impressions=float(cols[5]),
                clicks=float(cols[6]),
            )
        except ValueError as exc:
            errors.append(ParseError(line_no, str(exc), raw))
            continue
        records.append(record)
    return ParseResult(records=records, errors=errors)


def format_records(records: Iterable[BidRecord]) -> str:
    """Inverse of parse_records on valid records."""
    lines = []
    for r in records:
        lines.append(
            f"{r.day} {r.account_id} {r.rank} {r.keyphrase} "
            f"{r.bid!r} {r.impressions!r} {r.clicks!r}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


_METRICS = ("bid", "impressions", "clicks", "rank")


def build_bipartite_graph(records: Iterable[BidRecord], metric: str = "bid") -> BipartiteGraph:
    """Aggregate records into a weighted bidder-keyphrase graph. Weights
    are summed over days for bid / impressions / clicks; the rank metric
    uses the mean rank instead (summing ranks would be meaningless).
    Zero-weight edges are dropped after aggregation."""
    if metric not in _METRICS:
        raise ValueError(f"metric must be one of {_METRICS}")
    sums: dict[tuple[str, str], float] = {}
    counts: dict[tuple[str, str], int] = {}
    for r in records:
        key = (r.account_id, r.keyphrase)
        sums[key] = sums.get(key, 0.0) + float(getattr(r, metric))
        counts[key] = counts.get(key, 0) + 1
    edges = []
    for key, total in sums.items():
        weight = total / counts[key] if metric == "rank" else total
        if weight > 0:
            edges.append((key[0], key[1], weight))
    return BipartiteGraph(edges)


@dataclass(frozen=True)
class GeneratorParams:
    """Desk-scale synthetic dataset knobs. Defaults target the reference
    log's shape: median ~9 bids per bidder-day, ~2 per keyphrase-day, and
    log-normal bid values with median ~63 cents (6300 internal units)."""

    n_bidders: int = 500
    n_keyphrases: int = 2000
    n_days: int = 7
    n_communities: int = 2
    cross_rate: float = 0.09  # chance a portfolio slot crosses communities
    portfolio_median: float = 9.0
    portfolio_sigma: float = 0.45
    bid_median: float = 6300.0  # 1/100 cent
    bid_sigma: float = 1.0
    daily_jitter: float = 0.15
    impressions_median: float = 2.0
    impressions_sigma: float = 1.0
    base_ctr: float = 0.05

    def __post_init__(self):
        if self.n_bidders < 0 or self.n_keyphrases < 0 or self.n_days < 0:
            raise ValueError("counts must be nonnegative")
        if self.n_bidders > 0:
            if self.n_keyphrases < 1:
                raise ValueError("need at least one keyphrase")
            if not 1 <= self.n_communities <= min(max(self.n_bidders, 1), self.n_keyphrases):
                raise ValueError("n_communities must fit within bidders and keyphrases")
        if not 0 <= self.cross_rate <= 1:
            raise ValueError("cross_rate must lie in [0, 1]")
        if self.bid_median <= 0 or self.portfolio_median < 1:
            raise ValueError("medians must be positive")

    @classmethod
    def from_dict(cls, raw: dict) -> "GeneratorParams":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"unknown generator parameters: {unknown}")
        return replace(cls(), **raw)


def _community_of(index: int, total: int, n_communities: int) -> int:
    return index * n_communities // total


def generate_synthetic_dataset(params: GeneratorParams, seed) -> list[BidRecord]:
    """Deterministic synthetic bid log with planted community structure.

    Each bidder gets a keyphrase portfolio (log-normal size) drawn mostly
    from its own community, a log-normal base value per portfolio edge, and
    bids every day with small multiplicative jitter. Ranks are positions in
    the per-keyphrase-day bid ordering; clicks are binomial thinning of
    impressions with a rank-decaying rate.
    """
    p = params
    if p.n_bidders == 0 or p.n_days == 0:
        return []
    rng = np.random.default_rng(seed)

    kp_comm = np.fromiter(
        (_community_of(j, p.n_keyphrases, p.n_communities) for j in range(p.n_keyphrases)),
        dtype=np.int64,
        count=p.n_keyphrases,
    )
    kp_by_comm = [np.nonzero(kp_comm == c)[0] for c in range(p.n_communities)]
    bidder_ids = [f"a{i:04x}" for i in range(p.n_bidders)]
    kp_names = [f"k{j:04x},w{j % 7:02x}" for j in range(p.n_keyphrases)]

    portfolios: list[np.ndarray] = []
    base_values: list[np.ndarray] = []
    for i in range(p.n_bidders):
        comm = _community_of(i, p.n_bidders, p.n_communities)
        size = int(np.clip(round(rng.lognormal(np.log(p.portfolio_median), p.portfolio_sigma)), 1, p.n_keyphrases))
        n_cross = int(rng.binomial(size, p.cross_rate)) if p.n_communities > 1 else 0
        own_pool = kp_by_comm[comm]
        other_pool = np.setdiff1d(np.arange(p.n_keyphrases), own_pool, assume_unique=True)
        n_within = min(size - n_cross, own_pool.size)
        n_cross = min(n_cross, other_pool.size)
        picks = [rng.choice(own_pool, size=n_within, replace=False)]
        if n_cross > 0:
            picks.append(rng.choice(other_pool, size=n_cross, replace=False))
        portfolio = np.sort(np.concatenate(picks))
        portfolios.append(portfolio)
        base_values.append(rng.lognormal(np.log(p.bid_median), p.bid_sigma, portfolio.size))

    records: list[BidRecord] = []
    for day in range(1, p.n_days + 1):
        daily: list[tuple[int, int, float, float]] = []  # bidder, kp, bid, impressions
        for i in range(p.n_bidders):
            jitter = rng.lognormal(0.0, p.daily_jitter, portfolios[i].size)
            imps = np.maximum(
                1.0,
                np.round(rng.lognormal(np.log(p.impressions_median), p.impressions_sigma, portfolios[i].size)),
            )
            for kp, bid, imp in zip(portfolios[i], base_values[i] * jitter, imps):
                daily.append((i, int(kp), float(bid), float(imp)))
        ranks: dict[tuple[int, int], int] = {}
        by_kp: dict[int, list[tuple[int, float]]] = {}
        for bidder, kp, bid, _ in daily:
            by_kp.setdefault(kp, []).append((bidder, bid))
        for kp, entrants in by_kp.items():
            for pos, (bidder, _) in enumerate(
                sorted(entrants, key=lambda t: (-t[1], t[0])), start=1
            ):
                ranks[(bidder, kp)] = pos
        for bidder, kp, bid, imp in daily:
            rank = ranks[(bidder, kp)]
            ctr = p.base_ctr * 0.6 ** (rank - 1)
            clicks = float(rng.binomial(int(imp), min(ctr, 1.0)))
            records.append(
                BidRecord(
                    day=day,
                    account_id=bidder_ids[bidder],
                    rank=rank,
                    keyphrase=kp_names[kp],
                    bid=round(bid, 1),
                    impressions=imp,
                    clicks=clicks,
                )
            )
    return records


def _panel(groups: dict, clicks_key: str = "clicks") -> dict:
    stats: dict[str, dict[str, float]] = {}
    names = ("nbr_bids", "bid_value", "impressions", "clicks")
    arrays = {name: np.asarray([g[name] for g in groups.values()]) for name in names}
    for name, arr in arrays.items():
        stats[name] = {
            "min": float(arr.min()),
            "median": float(np.median(arr)),
            "max": float(arr.max()),
        }
    stats["clicks"]["cdf_1"] = float(100.0 * np.mean(arrays[clicks_key] <= 1))
    return stats


def summarize_records(records: Iterable[BidRecord]) -> dict:
    """Per-keyphrase-day and per-bidder-day aggregates (bid count, total
    bid value, impressions, clicks) with min / median / max, plus the
    percentage of entity-days with at most one click."""
    per_kp: dict[tuple[str, int], dict] = {}
    per_bidder: dict[tuple[str, int], dict] = {}
    n_records = 0
    for r in records:
        n_records += 1
        for table, key in ((per_kp, (r.keyphrase, r.day)), (per_bidder, (r.account_id, r.day))):
            g = table.setdefault(key, {"nbr_bids": 0, "bid_value": 0.0, "impressions": 0.0, "clicks": 0.0})
            g["nbr_bids"] += 1
            g["bid_value"] += r.bid
            g["impressions"] += r.impressions
            g["clicks"] += r.clicks
    if n_records == 0:
        return {"n_records": 0, "per_keyphrase": {}, "per_bidder": {}}
    return {
        "n_records": n_records,
        "per_keyphrase": _panel(per_kp),
        "per_bidder": _panel(per_bidder),
    }
