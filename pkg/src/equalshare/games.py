"""Symmetric zero-sum games in opponent-count form.

A symmetric game is fully described by the payoff of a single player as a
function of (own action, multiset of opponent actions).  We encode the
multiset as a count vector over the shared action set, which makes exact
expectations against i.i.d. opponents a sum over C(n-2+A, A-1) multinomial
terms instead of A^(n-1) joint actions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# Sentinel for log(0) in multinomial weights.  Finite (so 0 * LOG_ZERO == 0,
# never NaN) and large enough that exp(k * LOG_ZERO + anything_reasonable)
# underflows to exactly 0.0 for k >= 1.
LOG_ZERO = -1e9

PROB_TOL = 1e-9


class DimensionError(ValueError):
    """Strategy or count vector does not match the game's action count."""


class InvalidStrategyError(ValueError):
    """Probability vector fails non-negativity or normalization."""


class SizeCapExceeded(RuntimeError):
    """An enumeration was refused because it exceeds the configured cap."""


def as_strategy(probs: Sequence[float], num_actions: int | None = None) -> np.ndarray:
    """Validate and return a mixed strategy as a float64 array.

    Entries must be non-negative and sum to 1 within 1e-9 (absolute).
    """
    x = np.asarray(probs, dtype=float)
    if x.ndim != 1:
        raise InvalidStrategyError(f"strategy must be a vector, got shape {x.shape}")
    if num_actions is not None and x.shape[0] != num_actions:
        raise DimensionError(f"strategy has {x.shape[0]} entries, expected {num_actions}")
    if np.any(x < 0):
        raise InvalidStrategyError(f"negative probability in {x}")
    s = float(x.sum())
    if abs(s - 1.0) > PROB_TOL:
        raise InvalidStrategyError(f"probabilities sum to {s}, not 1")
    return x


def compositions(total: int, parts: int) -> np.ndarray:
    """All non-negative integer vectors of length `parts` summing to `total`.

    Returned as an int array of shape (C(total+parts-1, parts-1), parts) in
    lexicographic order.
    """
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    rows = []
    for first in range(total + 1):
        rest = compositions(total - first, parts - 1)
        block = np.empty((rest.shape[0], parts), dtype=np.int64)
        block[:, 0] = first
        block[:, 1:] = rest
        rows.append(block)
    return np.concatenate(rows, axis=0)


def num_compositions(total: int, parts: int) -> int:
    return math.comb(total + parts - 1, parts - 1)


@dataclass(frozen=True)
class CountTable:
    """Pre-enumerated count vectors of a fixed total, with multinomial data.

    counts      : (K, A) int array, all count vectors with the given total
    log_coeffs  : (K,) multinomial coefficients log(total! / prod c_a!)
    index_of    : flat lookup from radix-encoded counts to row index
    radix       : encoding base (total + 1)
    """

    total: int
    counts: np.ndarray
    log_coeffs: np.ndarray
    index_of: np.ndarray
    radix: np.ndarray

    @classmethod
    def build(cls, total: int, num_actions: int) -> "CountTable":
        counts = compositions(total, num_actions)
        lg = math.lgamma(total + 1)
        log_coeffs = lg - np.sum(
            np.vectorize(math.lgamma)(counts + 1.0), axis=1
        )
        radix = (total + 1) ** np.arange(num_actions - 1, -1, -1, dtype=np.int64)
        codes = counts @ radix
        index_of = np.full((total + 1) ** num_actions, -1, dtype=np.int64)
        index_of[codes] = np.arange(counts.shape[0])
        return cls(total, counts, log_coeffs, index_of, radix)

    def index(self, counts: Sequence[int]) -> int:
        code = int(np.dot(np.asarray(counts, dtype=np.int64), self.radix))
        idx = int(self.index_of[code])
        if idx < 0:
            raise ValueError(f"count vector {counts} has wrong total (expected {self.total})")
        return idx

    def weights(self, y: np.ndarray) -> np.ndarray:
        """Multinomial(total, y) probability of each count vector."""
        logy = np.where(y > 0.0, np.log(np.where(y > 0.0, y, 1.0)), LOG_ZERO)
        return np.exp(self.log_coeffs + self.counts @ logy)

    def weights_batch(self, ys: np.ndarray) -> np.ndarray:
        """Weights for many strategies at once: (Ny, A) -> (Ny, K)."""
        logy = np.where(ys > 0.0, np.log(np.where(ys > 0.0, ys, 1.0)), LOG_ZERO)
        return np.exp(self.log_coeffs[None, :] + logy @ self.counts.T)


@dataclass
class SymmetricGame:
    """An n-player symmetric zero-sum game over a shared action set.

    payoff(a, counts) is the payoff of a player using action a when the
    remaining n-1 players' actions have the given per-action counts.
    scale bounds |payoff| over the whole domain.
    """

    name: str
    n: int
    A: int
    payoff: Callable[[int, tuple[int, ...]], float]
    scale: float
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2 or self.A < 2:
            raise ValueError("need n >= 2 players and A >= 2 actions")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def count_table(self, total: int | None = None) -> CountTable:
        if total is None:
            total = self.n - 1
        key = ("table", total)
        if key not in self._cache:
            self._cache[key] = CountTable.build(total, self.A)
        return self._cache[key]

    def payoff_matrix(self, total: int | None = None) -> np.ndarray:
        """(A, K) array of payoff(a, counts) over a CountTable's rows."""
        if total is None:
            total = self.n - 1
        key = ("payoffs", total)
        if key not in self._cache:
            table = self.count_table(total)
            mat = np.empty((self.A, table.counts.shape[0]))
            for a in range(self.A):
                for k, row in enumerate(table.counts):
                    mat[a, k] = self.payoff(a, tuple(int(v) for v in row))
            self._cache[key] = mat
        return self._cache[key]


def profile_payoff(game: SymmetricGame, a: int, others: Sequence[int]) -> float:
    """Payoff of action `a` against opponents with the given action counts."""
    c = np.asarray(others, dtype=np.int64)
    if c.shape != (game.A,):
        raise DimensionError(f"count vector has shape {c.shape}, expected ({game.A},)")
    if np.any(c < 0):
        raise ValueError(f"negative count in {others}")
    if int(c.sum()) != game.n - 1:
        raise ValueError(f"opponent counts sum to {int(c.sum())}, expected {game.n - 1}")
    if not 0 <= a < game.A:
        raise ValueError(f"action {a} outside [0, {game.A})")
    return float(game.payoff(a, tuple(int(v) for v in c)))


def expected_payoff_iid(game: SymmetricGame, a: int, y: Sequence[float]) -> float:
    """Exact expected payoff of action `a` against n-1 opponents i.i.d. ~ y."""
    yv = as_strategy(y, game.A)
    table = game.count_table()
    return float(game.payoff_matrix()[a] @ table.weights(yv))


def payoff_vector(game: SymmetricGame, y: Sequence[float]) -> np.ndarray:
    """Expected payoff of every action against n-1 opponents i.i.d. ~ y."""
    yv = as_strategy(y, game.A)
    return game.payoff_matrix() @ game.count_table().weights(yv)


def payoff_vectors_batch(game: SymmetricGame, ys: np.ndarray) -> np.ndarray:
    """payoff_vector for many meta-strategies at once: (Ny, A) -> (Ny, A)."""
    w = game.count_table().weights_batch(np.asarray(ys, dtype=float))
    return w @ game.payoff_matrix().T


def expected_payoff_mixed(game: SymmetricGame, x1: Sequence[float], y: Sequence[float]) -> float:
    """Expected payoff of mixed strategy x1 against opponents i.i.d. ~ y."""
    xv = as_strategy(x1, game.A)
    return float(xv @ payoff_vector(game, y))


def realized_payoff_vector(game: SymmetricGame, counts: Sequence[int]) -> np.ndarray:
    """Payoff of every action against one realized opponent count vector."""
    table = game.count_table()
    idx = table.index(counts)
    return game.payoff_matrix()[:, idx].copy()


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    worst_violation: float
    worst_profile: tuple[int, ...] | None
    num_profiles: int

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        msg = f"zero-sum check: {status} over {self.num_profiles} profiles, worst violation {self.worst_violation:.3g}"
        if not self.passed and self.worst_profile is not None:
            msg += f" at profile {self.worst_profile}"
        return msg


def validate(game: SymmetricGame, max_profiles: int = 250_000) -> ValidationReport:
    """Check the zero-sum identity over every full action profile.

    For each count vector c with total n, the payoffs of all n players must
    sum to zero:  sum_a c[a] * payoff(a, c - e_a) == 0 within 1e-9 * scale.
    Refuses (rather than silently sampling) when the enumeration is too big.
    """
    num = num_compositions(game.n, game.A)
    if num > max_profiles:
        raise SizeCapExceeded(
            f"{num} full profiles exceed the cap of {max_profiles}; validation refused"
        )
    full = compositions(game.n, game.A)
    tol = PROB_TOL * game.scale
    worst = 0.0
    worst_profile = None
    for c in full:
        total = 0.0
        for a in range(game.A):
            if c[a] > 0:
                others = c.copy()
                others[a] -= 1
                total += c[a] * game.payoff(a, tuple(int(v) for v in others))
        if abs(total) > worst:
            worst = abs(total)
            worst_profile = tuple(int(v) for v in c)
    return ValidationReport(worst <= tol, worst, worst_profile if worst > tol else worst_profile, num)


# ---------------------------------------------------------------------------
# Dense joint-action form, for equilibrium verification on small games.
# ---------------------------------------------------------------------------

@dataclass
class DenseGame:
    """Full payoff tensors U_i over joint actions, one per player.

    utilities has shape (n, A, ..., A) with n trailing action axes.
    Only intended for n <= 4.
    """

    n: int
    A: int
    utilities: np.ndarray

    def __post_init__(self):
        expected = (self.n,) + (self.A,) * self.n
        if self.utilities.shape != expected:
            raise DimensionError(
                f"utilities shape {self.utilities.shape}, expected {expected}"
            )


@dataclass(frozen=True)
class DenseValidationReport:
    zero_sum: bool
    symmetric: bool
    worst_zero_sum: float
    worst_symmetry: float

    @property
    def passed(self) -> bool:
        return self.zero_sum and self.symmetric

    def __str__(self):
        return (
            f"dense check: zero-sum {'pass' if self.zero_sum else 'FAIL'} "
            f"(worst {self.worst_zero_sum:.3g}), symmetry "
            f"{'pass' if self.symmetric else 'FAIL'} (worst {self.worst_symmetry:.3g})"
        )


def dense_from_symmetric(game: SymmetricGame, max_n: int = 4, max_actions: int = 8) -> DenseGame:
    """Expand an opponent-count game into per-player joint-action tensors."""
    if game.n > max_n or game.A > max_actions:
        raise SizeCapExceeded(
            f"dense expansion refused for n={game.n}, A={game.A} "
            f"(caps: n<={max_n}, A<={max_actions})"
        )
    shape = (game.n,) + (game.A,) * game.n
    util = np.empty(shape)
    for joint in np.ndindex(*(game.A,) * game.n):
        for i in range(game.n):
            others = np.zeros(game.A, dtype=np.int64)
            for j, aj in enumerate(joint):
                if j != i:
                    others[aj] += 1
            util[(i,) + joint] = game.payoff(joint[i], tuple(int(v) for v in others))
    return DenseGame(game.n, game.A, util)


def validate_dense(dense: DenseGame, tol: float = 1e-9) -> DenseValidationReport:
    """Check the zero-sum and permutation-symmetry conditions on tensors."""
    import itertools

    total = dense.utilities.sum(axis=0)
    worst_zs = float(np.max(np.abs(total)))

    worst_sym = 0.0
    n = dense.n
    for sigma in itertools.permutations(range(n)):
        # A symmetric game satisfies U_i(a_1..a_n) = U_{sigma^-1(i)}(a_sigma(1)..a_sigma(n)).
        # With numpy's transpose convention, composing indices with sigma
        # means passing the inverse permutation as axes.
        inv = [0] * n
        for pos, p in enumerate(sigma):
            inv[p] = pos
        for i in range(n):
            permuted = np.transpose(dense.utilities[inv[i]], axes=inv)
            diff = float(np.max(np.abs(dense.utilities[i] - permuted)))
            worst_sym = max(worst_sym, diff)
    scale = float(np.max(np.abs(dense.utilities))) or 1.0
    return DenseValidationReport(
        worst_zs <= tol * scale, worst_sym <= tol * scale, worst_zs, worst_sym
    )


# ---------------------------------------------------------------------------
# Built-in games.
# ---------------------------------------------------------------------------

def _majority_payoff(a: int, counts: tuple[int, ...]) -> float:
    allies = counts[a] + 1
    if allies == 3:
        return 0.0
    return 0.5 if allies == 2 else -1.0


def _minority_payoff(a: int, counts: tuple[int, ...]) -> float:
    allies = counts[a] + 1
    if allies == 3:
        return 0.0
    return -0.5 if allies == 2 else 1.0


def majority3() -> SymmetricGame:
    """3-player majority vote on {0, 1}: majority wins 1/2 each, loner loses 1."""
    return SymmetricGame("majority3", 3, 2, _majority_payoff, 1.0, kind="majority3")


def minority3() -> SymmetricGame:
    """3-player minority game on {0, 1}: loner wins 1, majority loses 1/2 each."""
    return SymmetricGame("minority3", 3, 2, _minority_payoff, 1.0, kind="minority3")


def _sdg_payoff_fn(n: int) -> Callable[[int, tuple[int, ...]], float]:
    # Actions 0, 1, 2 stand for A, B, C.  The dominance order flips on the
    # count of action A among all n players; divisions are guarded by the
    # indicator so a zero indicator never evaluates its term.
    def pay(a: int, counts: tuple[int, ...]) -> float:
        full = [counts[0], counts[1], counts[2]]
        full[a] += 1
        if 5 * full[0] > n:
            order = (1, 0, 2)  # B > A > C
        else:
            order = (2, 1, 0)  # C > B > A
        ni, nj, nk = full[order[0]], full[order[1]], full[order[2]]
        if a == order[0]:
            return 1.0 if nj + nk > 0 else 0.0
        if a == order[1]:
            r = 1.0 if nk > 0 else 0.0
            if nj + nk > 0:
                r -= ni / (nj + nk)
            return r
        r = 0.0
        if nj + nk > 0:
            r -= ni / (nj + nk)
        if nk > 0:
            r -= nj / nk
        return r

    return pay


def sdg(n: int = 30) -> SymmetricGame:
    """Switch dominance game on {A, B, C}: C is dominated while enough players
    pick A, dominating otherwise.  Payoffs telescope to zero-sum by design.

    |payoff| peaks at n-1 (a lone bottom-ranked player against a unanimous
    field), which sets the scale bound.
    """
    if n < 2:
        raise ValueError("sdg requires n >= 2")
    return SymmetricGame(f"sdg({n})", n, 3, _sdg_payoff_fn(n), float(n - 1), kind="sdg", params={"n": n})


def _majority_symbol_payoff(a: int, b: int, c: int) -> float:
    """3-player majority vote extended with interchangeable dummy actions.

    Actions outside {0, 1} collapse to a single dummy symbol.  A player
    whose symbol is shared by another gets 1/2, a lone symbol against a
    pair gets -1, unanimity gets 0.  In the one remaining profile class
    (all three symbols distinct) the dummy is the loser at -1 and the two
    binary players split the remainder.
    """
    sa = a if a < 2 else 2
    sb = b if b < 2 else 2
    sc = c if c < 2 else 2
    if sa == sb == sc:
        return 0.0
    if sa == sb or sa == sc:
        return 0.5
    if sb == sc:
        return -1.0
    # all distinct: symbols are {0, 1, dummy}
    return -1.0 if sa == 2 else 0.5


def _extended_majority_payoff_fn(n: int) -> Callable[[int, tuple[int, ...]], float]:
    scale = 1.0 / ((n - 1) * (n - 2))

    def pay(a: int, counts: tuple[int, ...]) -> float:
        # Average of the 3-player payoff over all ordered pairs of distinct
        # opponents, computed from action counts.
        total = 0.0
        for b, cb in enumerate(counts):
            if cb == 0:
                continue
            for c, cc in enumerate(counts):
                if cc == 0:
                    continue
                mult = cb * (cc - 1) if b == c else cb * cc
                if mult:
                    total += mult * _majority_symbol_payoff(a, b, c)
        return total * scale

    return pay


def extended_majority(n: int = 3, num_actions: int = 2) -> SymmetricGame:
    """Pairwise-averaged majority vote with optional dummy actions.

    With n=3 and two actions this is exactly the 3-player majority game.
    Extra actions beyond {0, 1} are penalized dummies.
    """
    if n < 3:
        raise ValueError("extended_majority requires n >= 3")
    if num_actions < 2:
        raise ValueError("extended_majority requires A >= 2")
    return SymmetricGame(
        f"extended_majority({n},{num_actions})",
        n,
        num_actions,
        _extended_majority_payoff_fn(n),
        1.0,
        kind="extended_majority",
        params={"n": n, "num_actions": num_actions},
    )


def builtin_game(name: str, **params) -> SymmetricGame:
    """Construct a built-in game by name.

    Names: majority3, minority3, sdg (param n), extended_majority
    (params n, num_actions).
    """
    builders = {
        "majority3": majority3,
        "minority3": minority3,
        "sdg": sdg,
        "extended_majority": extended_majority,
    }
    if name not in builders:
        raise ValueError(f"unknown game {name!r}; choose from {sorted(builders)}")
    return builders[name](**params)


# ---------------------------------------------------------------------------
# JSON game documents.
# ---------------------------------------------------------------------------

def game_to_json(game: SymmetricGame) -> dict:
    """Serialize a game.  Built-ins serialize by name; custom games dump the
    full payoff table keyed by "a|c0,c1,..."."""
    if game.kind != "custom":
        return {"name": game.kind, **game.params}
    table = game.count_table()
    payoffs = {}
    for a in range(game.A):
        for row in table.counts:
            key = f"{a}|{','.join(str(int(v)) for v in row)}"
            payoffs[key] = game.payoff(a, tuple(int(v) for v in row))
    return {"custom": {"n": game.n, "A": game.A, "payoff_table": payoffs}}


def game_from_json(doc: dict) -> SymmetricGame:
    """Inverse of game_to_json."""
    if "name" in doc:
        params = {k: v for k, v in doc.items() if k != "name"}
        return builtin_game(doc["name"], **params)
    if "custom" not in doc:
        raise ValueError("game document needs either 'name' or 'custom'")
    spec = doc["custom"]
    n, A = int(spec["n"]), int(spec["A"])
    table = {}
    for key, value in spec["payoff_table"].items():
        a_str, counts_str = key.split("|")
        counts = tuple(int(v) for v in counts_str.split(","))
        if len(counts) != A or sum(counts) != n - 1:
            raise ValueError(f"bad payoff key {key!r} for n={n}, A={A}")
        table[(int(a_str), counts)] = float(value)

    def pay(a: int, counts: tuple[int, ...]) -> float:
        try:
            return table[(a, counts)]
        except KeyError:
            raise ValueError(f"payoff table missing entry for action {a}, counts {counts}")

    scale = max(abs(v) for v in table.values()) or 1.0
    return SymmetricGame("custom", n, A, pay, scale, kind="custom")


def load_game(path_or_name: str, **params) -> SymmetricGame:
    """Load `file:<path>` as a JSON game document, else treat as builtin name."""
    if path_or_name.startswith("file:"):
        with open(path_or_name[5:]) as fh:
            return game_from_json(json.load(fh))
    return builtin_game(path_or_name, **params)
