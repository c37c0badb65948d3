"""Second-price and positional VCG auction engines with personalized
reserve prices, plus welfare outcome models over collections of auctions.

Treatment raises a bidder's reserve; bids equal values (truthful, no
budgets), so an assignment only changes which bids are valid. Utilities are
zero for losers, and value-minus-payment (scaled by the slot's click-through
rate in the positional case) for winners.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import Assignment, PotentialOutcomeModel

__all__ = [
    "BidderProfile",
    "PositionCurve",
    "AuctionResult",
    "Auction",
    "AuctionOutcomeModel",
    "ConvexityVerdict",
    "PointwiseMonotonicityReport",
    "run_second_price",
    "run_vcg_positional",
    "vcg_externality_oracle",
    "check_position_convexity",
    "auction_welfare_outcomes",
    "pointwise_monotonicity_check",
    "load_auctions_csv",
    "load_profiles_csv",
]


@dataclass(frozen=True)
class BidderProfile:
    """Reserve pair for one bidder; treatment always raises the reserve."""

    control_reserve: float
    treatment_reserve: float

    def __post_init__(self):
        if self.control_reserve < 0:
            raise ValueError("control reserve must be nonnegative")
        if not self.treatment_reserve > self.control_reserve:
            raise ValueError("treatment reserve must exceed the control reserve")


@dataclass(frozen=True)
class PositionCurve:
    """Per-slot click-through rates, strictly decreasing, in (0, 1]."""

    pos: tuple[float, ...]

    def __post_init__(self):
        pos = tuple(float(p) for p in self.pos)
        if len(pos) == 0:
            raise ValueError("curve needs at least one slot")
        if any(p <= 0 or p > 1 for p in pos):
            raise ValueError("click-through rates must lie in (0, 1]")
        if any(pos[i + 1] >= pos[i] for i in range(len(pos) - 1)):
            raise ValueError("click-through rates must be strictly decreasing")
        object.__setattr__(self, "pos", pos)

    @property
    def n_slots(self) -> int:
        return len(self.pos)


@dataclass(frozen=True)
class ConvexityVerdict:
    convex: bool
    violated_at: int | None  # 1-based slot index k with pos[k-2]+pos[k] < 2*pos[k-1]


def check_position_convexity(curve: PositionCurve) -> ConvexityVerdict:
    """Second-difference test: pos_{k-2} + pos_k - 2*pos_{k-1} >= 0 for all
    k >= 3. Curves with fewer than three slots are vacuously convex."""
    pos = curve.pos
    for k in range(3, len(pos) + 1):
        if pos[k - 3] + pos[k - 1] - 2.0 * pos[k - 2] < 0:
            return ConvexityVerdict(convex=False, violated_at=k)
    return ConvexityVerdict(convex=True, violated_at=None)


@dataclass(frozen=True)
class AuctionResult:
    """Per-participant outcome of one auction. `winners` lists participant
    indices in slot order; losers have payment 0 and utility 0."""

    winners: tuple[int, ...]
    payments: np.ndarray
    utilities: np.ndarray


def _valid_order(values: np.ndarray, reserves: np.ndarray) -> list[int]:
    """Participants with valid bids (value >= reserve, weak), sorted by
    descending value with ties broken toward the lower index."""
    valid = np.nonzero(values >= reserves)[0]
    return sorted(valid.tolist(), key=lambda i: (-values[i], i))


def run_second_price(values, reserves) -> AuctionResult:
    """Single-item second-price auction: the highest valid bidder wins and
    pays the maximum of her own reserve and the second-highest valid bid
    (zero when there is none). No valid bids means no winner."""
    values = np.asarray(values, dtype=np.float64)
    reserves = np.asarray(reserves, dtype=np.float64)
    if values.shape != reserves.shape or values.ndim != 1 or values.size == 0:
        raise ValueError("values and reserves must be matching nonempty vectors")
    payments = np.zeros(values.size)
    utilities = np.zeros(values.size)
    order = _valid_order(values, reserves)
    if not order:
        return AuctionResult(winners=(), payments=payments, utilities=utilities)
    winner = order[0]
    second = values[order[1]] if len(order) > 1 else 0.0
    payments[winner] = max(reserves[winner], second)
    utilities[winner] = values[winner] - payments[winner]
    return AuctionResult(winners=(winner,), payments=payments, utilities=utilities)


def _slot_gaps(curve: PositionCurve, n_ranks: int) -> np.ndarray:
    """gap[q] for 1-based rank q: the click-through drop a bidder at rank q
    inflicts on the bidder above when slots cascade. The curve is extended
    with zeros past the last slot, so rank m+1 carries gap pos_m."""
    pos = curve.pos
    m = len(pos)
    gaps = np.zeros(n_ranks + 1)
    for q in range(2, n_ranks + 1):
        upper = pos[q - 2] if q - 2 < m else 0.0
        lower = pos[q - 1] if q - 1 < m else 0.0
        gaps[q] = upper - lower
    return gaps


def run_vcg_positional(values, reserves, curve: PositionCurve) -> AuctionResult:
    """Positional VCG auction. Valid bidders fill slots in descending value
    order; the slot-k winner is charged the click-weighted externality she
    imposes on the valid bidders ranked below her:

        p_k = sum_{j > k} (pos_{j-1} - pos_j) * v_(j)

    with the curve read as zero past the last slot, so the first runner-up
    (rank m+1) contributes pos_m * v_(m+1). With a single slot this is the
    second-price rule scaled by pos_1 (for winners whose own reserve does
    not bind)."""
    values = np.asarray(values, dtype=np.float64)
    reserves = np.asarray(reserves, dtype=np.float64)
    if values.shape != reserves.shape or values.ndim != 1 or values.size == 0:
        raise ValueError("values and reserves must be matching nonempty vectors")
    payments = np.zeros(values.size)
    utilities = np.zeros(values.size)
    order = _valid_order(values, reserves)
    m = curve.n_slots
    gaps = _slot_gaps(curve, len(order))
    terms = [gaps[rank] * values[i] for rank, i in enumerate(order, start=1)]
    winners = tuple(order[:m])
    for k, i in enumerate(winners, start=1):
        payments[i] = float(sum(terms[k:]))
        utilities[i] = curve.pos[k - 1] * values[i] - payments[i]
    return AuctionResult(winners=winners, payments=payments, utilities=utilities)


def vcg_externality_oracle(values, reserves, curve: PositionCurve) -> np.ndarray:
    """Independent check of the VCG payments: for each allocated bidder,
    the total click-weighted value of the *other* valid bidders when she is
    removed (and everyone re-allocates) minus their total when she stays."""
    values = np.asarray(values, dtype=np.float64)
    reserves = np.asarray(reserves, dtype=np.float64)
    m = curve.n_slots

    def allocated_welfare(participants: Sequence[int], skip: int | None) -> float:
        ranked = sorted(
            (i for i in participants if i != skip), key=lambda i: (-values[i], i)
        )
        return float(sum(curve.pos[s] * values[i] for s, i in enumerate(ranked[:m])))

    order = _valid_order(values, reserves)
    payments = np.zeros(values.size)
    with_all = {
        i: allocated_welfare(order, skip=None) - curve.pos[s] * values[i]
        for s, i in enumerate(order[:m])
    }
    for i, welfare_others in with_all.items():
        payments[i] = allocated_welfare(order, skip=i) - welfare_others
    return payments


@dataclass(frozen=True)
class Auction:
    """One auction: participating bidder indices and their values."""

    participants: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        participants = np.asarray(self.participants, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if participants.ndim != 1 or participants.shape != values.shape:
            raise ValueError("participants and values must be matching vectors")
        if participants.size == 0:
            raise ValueError("auction needs at least one participant")
        if np.unique(participants).size != participants.size:
            raise ValueError("a bidder may participate at most once per auction")
        if np.any(values <= 0):
            raise ValueError("values must be positive")
        object.__setattr__(self, "participants", participants)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class AuctionOutcomeModel:
    """Welfare outcomes over a set of auctions: Y_i(Z) is bidder i's total
    utility across the auctions she participates in, where treated bidders
    face their treatment reserve and control bidders their control reserve.

    Evaluation is vectorized over auctions grouped by participant count;
    the per-auction engines define the semantics and are used as the
    reference in tests. Outcomes are deterministic (noise_seed is ignored).
    """

    n_bidders: int
    auctions: tuple[Auction, ...]
    control_reserves: np.ndarray
    treatment_reserves: np.ndarray
    mechanism: str  # "second_price" | "vcg_positional"
    curve: PositionCurve | None = None
    _groups: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.mechanism not in ("second_price", "vcg_positional"):
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if self.mechanism == "vcg_positional" and self.curve is None:
            raise ValueError("vcg_positional requires a position curve")
        r0 = np.asarray(self.control_reserves, dtype=np.float64)
        r1 = np.asarray(self.treatment_reserves, dtype=np.float64)
        if r0.shape != (self.n_bidders,) or r1.shape != (self.n_bidders,):
            raise ValueError("reserve vectors must have one entry per bidder")
        if np.any(r0 < 0):
            raise ValueError("control reserves must be nonnegative")
        if np.any(r1 <= r0):
            raise ValueError("treatment reserves must exceed control reserves")
        for auction in self.auctions:
            if np.any(auction.participants >= self.n_bidders) or np.any(auction.participants < 0):
                raise ValueError("auction references a bidder without a profile")
        object.__setattr__(self, "control_reserves", r0)
        object.__setattr__(self, "treatment_reserves", r1)
        object.__setattr__(self, "auctions", tuple(self.auctions))
        object.__setattr__(self, "_groups", self._build_groups())

    @classmethod
    def from_profiles(
        cls,
        auctions: Iterable[Auction],
        profiles: dict[int, BidderProfile],
        n_bidders: int,
        mechanism: str,
        curve: PositionCurve | None = None,
    ) -> "AuctionOutcomeModel":
        auctions = tuple(auctions)
        referenced = {int(b) for a in auctions for b in a.participants}
        missing = sorted(referenced - set(profiles))
        if missing:
            raise ValueError(f"bidders {missing} participate but have no profile")
        r0 = np.zeros(n_bidders)
        r1 = np.ones(n_bidders)  # placeholder satisfying r1 > r0 for idle bidders
        for b, prof in profiles.items():
            r0[b] = prof.control_reserve
            r1[b] = prof.treatment_reserve
        return cls(
            n_bidders=n_bidders,
            auctions=auctions,
            control_reserves=r0,
            treatment_reserves=r1,
            mechanism=mechanism,
            curve=curve,
        )

    def _build_groups(self) -> list:
        by_size: dict[int, list[Auction]] = {}
        for auction in self.auctions:
            by_size.setdefault(auction.participants.size, []).append(auction)
        groups = []
        for size in sorted(by_size):
            members = by_size[size]
            bidders = np.stack([a.participants for a in members])
            values = np.stack([a.values for a in members])
            # Fixed sort by (value desc, participant position asc): validity
            # masks change with the assignment but the ranking never does.
            order = np.lexsort(
                (np.broadcast_to(np.arange(size), values.shape), -values), axis=1
            )
            rows = np.arange(len(members))[:, None]
            groups.append((bidders[rows, order], values[rows, order]))
        return groups

    def n_units(self) -> int:
        return self.n_bidders

    def outcomes(self, z, noise_seed=None) -> np.ndarray:
        zv = z.z_units if isinstance(z, Assignment) else np.asarray(z)
        if zv.shape[0] != self.n_bidders:
            raise ValueError(f"assignment has {zv.shape[0]} entries for {self.n_bidders} bidders")
        treated = np.asarray(zv, dtype=bool)
        out = np.zeros(self.n_bidders)
        for bidders, values in self._groups:
            reserves = np.where(treated[bidders], self.treatment_reserves[bidders], self.control_reserves[bidders])
            valid = values >= reserves
            if self.mechanism == "second_price":
                self._accumulate_second_price(out, bidders, values, reserves, valid)
            else:
                self._accumulate_vcg(out, bidders, values, valid)
        return out

    @staticmethod
    def _accumulate_second_price(out, bidders, values, reserves, valid) -> None:
        has_winner = valid.any(axis=1)
        if not has_winner.any():
            return
        rows = np.nonzero(has_winner)[0]
        win_col = np.argmax(valid[rows], axis=1)  # first valid = best (sorted)
        rest = valid[rows].copy()
        rest[np.arange(rows.size), win_col] = False
        has_second = rest.any(axis=1)
        second_col = np.argmax(rest, axis=1)
        second_val = np.where(has_second, values[rows, second_col], 0.0)
        pay = np.maximum(reserves[rows, win_col], second_val)
        util = values[rows, win_col] - pay
        np.add.at(out, bidders[rows, win_col], util)

    def _accumulate_vcg(self, out, bidders, values, valid) -> None:
        size = values.shape[1]
        curve = self.curve
        m = curve.n_slots
        gaps = _slot_gaps(curve, size)
        rank = np.cumsum(valid, axis=1)  # 1-based among valid, junk where invalid
        terms = np.where(valid, gaps[rank] * values, 0.0)
        # payment at a column = sum of terms in strictly later columns
        suffix = np.flip(np.cumsum(np.flip(terms, axis=1), axis=1), axis=1) - terms
        allocated = valid & (rank <= m)
        if not allocated.any():
            return
        pos = np.asarray(curve.pos)
        slot_ctr = pos[np.minimum(rank, m) - 1]  # safe lookup; masked below
        util = np.where(allocated, slot_ctr * values - suffix, 0.0)
        np.add.at(out, bidders[allocated], util[allocated])


def auction_welfare_outcomes(model: AuctionOutcomeModel, z) -> np.ndarray:
    """Per-bidder total utility across all auctions under assignment z."""
    return model.outcomes(z)


@dataclass(frozen=True)
class PointwiseMonotonicityReport:
    holds: bool
    witness: tuple[int, int, np.ndarray] | None  # (unit hurt, unit flipped, base assignment)
    n_assignments: int


def pointwise_monotonicity_check(
    model: PotentialOutcomeModel, n_max: int = 12, tol: float = 1e-9
) -> PointwiseMonotonicityReport:
    """Exhaustively verify that flipping any one unit into treatment never
    decreases any *other* unit's outcome, across all assignments. This
    pointwise property implies the self-excitation inequalities for every
    clustering. Enumeration is over all 2^N assignments, so N <= n_max."""
    n = model.n_units()
    if n > n_max:
        raise ValueError(f"{n} units exceed the enumeration bound n_max={n_max}")
    table = np.empty((2**n, n))
    for idx in range(2**n):
        bits = ((idx >> np.arange(n)) & 1).astype(np.int8)
        table[idx] = np.asarray(model.outcomes(Assignment(bits), noise_seed=None))
    for idx in range(2**n):
        for j in range(n):
            if (idx >> j) & 1:
                continue
            flipped = idx | (1 << j)
            drop = table[idx] - table[flipped]
            drop[j] = -np.inf  # unit j itself may lose from its own treatment
            worst = int(np.argmax(drop))
            if drop[worst] > tol:
                witness_bits = ((idx >> np.arange(n)) & 1).astype(np.int8)
                return PointwiseMonotonicityReport(
                    holds=False, witness=(worst, j, witness_bits), n_assignments=2**n
                )
    return PointwiseMonotonicityReport(holds=True, witness=None, n_assignments=2**n)


def load_auctions_csv(path) -> tuple[tuple[Auction, ...], dict[str, int]]:
    """Read auctions from a CSV with columns auction_id, bidder_id, value.
    Returns the auctions plus the bidder_id -> index mapping (first
    appearance order)."""
    groups: dict[str, list[tuple[str, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"auction_id", "bidder_id", "value"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"auction CSV must have columns {sorted(required)}")
        for row in reader:
            groups.setdefault(row["auction_id"], []).append(
                (row["bidder_id"], float(row["value"]))
            )
    bidder_index: dict[str, int] = {}
    auctions = []
    for auction_id in groups:
        parts, values = [], []
        for bidder_id, value in groups[auction_id]:
            if bidder_id not in bidder_index:
                bidder_index[bidder_id] = len(bidder_index)
            parts.append(bidder_index[bidder_id])
            values.append(value)
        auctions.append(Auction(np.asarray(parts), np.asarray(values)))
    return tuple(auctions), bidder_index


def load_profiles_csv(path, bidder_index: dict[str, int]) -> dict[int, BidderProfile]:
    """Read reserve profiles from a CSV with columns bidder_id,
    control_reserve, treatment_reserve."""
    profiles: dict[int, BidderProfile] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"bidder_id", "control_reserve", "treatment_reserve"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"profile CSV must have columns {sorted(required)}")
        for row in reader:
            bid = row["bidder_id"]
            if bid not in bidder_index:
                continue
            profiles[bidder_index[bid]] = BidderProfile(
                control_reserve=float(row["control_reserve"]),
                treatment_reserve=float(row["treatment_reserve"]),
            )
    return profiles
