"""A-priori error bounds for truncated series functionals and their
discrete-time approximations, plus convergence-regime classification.

The two error sources are kept separate everywhere:

* e_hat(J) bounds the sum-vs-integral error accumulated by the words that
  are kept (|eta| <= J); it scales like 1/L;
* e_tail(J) bounds the truncation error from the words that are dropped
  (|eta| > J); it vanishes as J grows.

Both are driven by the scalar regime parameters

    s_hat = M * (m + 1) * L * ||uhat||_inf      (discrete),
    s     = M * (m + 1) * Rbar                  (continuous),

where Rbar = max(R, T) and R is the channel-wise L1 norm of the input.
For a series supported on a strict subset of the letters, m and the norms
should be taken over that subset (see effective_alphabet).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .algebra import DomainError, Growth, GrowthClass, SeriesSpec, Word, word_length_counts
from .signals import ContinuousInput, DiscreteInput, l1_norm


class Divergent(ArithmeticError):
    """A bound formula was evaluated outside its convergence region."""

    def __init__(self, parameter: str, value: float):
        super().__init__(f"{parameter} = {value:g} >= 1: bound diverges")
        self.parameter = parameter
        self.value = value


@dataclass(frozen=True)
class BoundInputs:
    """Everything the closed-form bounds depend on."""

    K: float
    M: float
    m: int
    L: int
    J: int
    norm_uhat: float
    Rbar: float

    def __post_init__(self):
        if self.K <= 0 or self.M <= 0:
            raise DomainError("growth constants K and M must be positive")
        if self.m < 0 or self.L < 1 or self.J < 0:
            raise DomainError("need m >= 0, L >= 1, J >= 0")
        if self.norm_uhat < 0 or self.Rbar < 0:
            raise DomainError("norms must be nonnegative")

    @property
    def s_hat(self) -> float:
        return self.M * (self.m + 1) * self.L * self.norm_uhat

    @property
    def s(self) -> float:
        return self.M * (self.m + 1) * self.Rbar


@dataclass(frozen=True)
class BoundReport:
    e_hat: float
    e_tail: float
    s_hat: float
    s: float
    mode: str
    regime_warnings: tuple[str, ...] = ()


def lc_bounds(b: BoundInputs, formula: str = "statement") -> BoundReport:
    """Error bounds for a series with local growth |(c,eta)| <= K M^|eta| |eta|!.

    formula="statement" evaluates the closed form

        e_hat(J) = (K/L) [ shat^2/(1-shat)^3 - 2J(J+1) shat^{J+1}/(1-shat)
                           - J shat^{J+2}/(1-shat)^2 - shat^{J+2}/(1-shat)^3 ],

    which is what the bundled regression tables report.  formula="exact_sum"
    evaluates the finite sum (K/2L) sum_{j=0}^{J} j(j-1) shat^j instead.  The
    two disagree: on the first regression-table row they give 0.0355 and
    0.0387 respectively.  Both are kept on purpose; reports carry the mode.

    The truncation tail is e(J) = K s^{J+1}/(1-s).  Raises Divergent when
    the relevant parameter reaches 1.
    """
    shat, s = b.s_hat, b.s
    if shat >= 1.0:
        raise Divergent("s_hat", shat)
    if s >= 1.0:
        raise Divergent("s", s)
    J, K, L = b.J, b.K, b.L
    if formula == "statement":
        e_hat = (K / L) * (
            shat**2 / (1.0 - shat) ** 3
            - 2.0 * J * (J + 1) * shat ** (J + 1) / (1.0 - shat)
            - J * shat ** (J + 2) / (1.0 - shat) ** 2
            - shat ** (J + 2) / (1.0 - shat) ** 3
        )
    elif formula == "exact_sum":
        e_hat = (K / (2.0 * L)) * math.fsum(
            j * (j - 1) * shat**j for j in range(2, J + 1)
        )
    else:
        raise DomainError(f"unknown LC bound formula {formula!r}")
    e_tail = K * s ** (J + 1) / (1.0 - s)
    return BoundReport(e_hat, e_tail, shat, s, mode=f"lc/{formula}")


def lc_simplified(b: BoundInputs) -> float:
    """Large-L, large-J simplification K shat^2 / (L (1-shat)^3); the limit of
    the statement-mode e_hat as J grows."""
    shat = b.s_hat
    if shat >= 1.0:
        raise Divergent("s_hat", shat)
    return b.K * shat**2 / (b.L * (1.0 - shat) ** 3)


def gamma_upper_regularized(order: int, x: float) -> float:
    """Regularized upper incomplete gamma Q(order, x) for integer order >= 1,
    via the finite identity Q(order, x) = e^{-x} sum_{j=0}^{order-1} x^j/j!,
    accumulated smallest term first."""
    if order < 1:
        raise DomainError(f"integer order must be >= 1, got {order}")
    if x < 0:
        raise DomainError(f"need x >= 0, got {x}")
    terms = []
    t = 1.0
    for j in range(order):
        if j > 0:
            t *= x / j
        terms.append(t)
    return math.exp(-x) * math.fsum(sorted(terms))


def _exp_tail(x: float, J: int) -> float:
    """sum_{j > J} x^j / j!, summed directly so tiny tails keep full relative
    accuracy (the e^x - partial_sum form would cancel catastrophically)."""
    if x == 0.0:
        return 0.0
    t = x ** (J + 1) / math.factorial(J + 1)
    terms = []
    j = J + 1
    while True:
        terms.append(t)
        j += 1
        t *= x / j
        if t < 1e-17 * math.fsum(terms) and j > x:
            break
        if j > J + 10_000:  # pragma: no cover - x would have to be enormous
            break
    return math.fsum(reversed(terms))


def gc_bounds(b: BoundInputs) -> BoundReport:
    """Error bounds for a series with global growth |(c,eta)| <= K M^|eta|:

        e_hat(J) = (K/2L) e^{shat} shat^2 Q(J+1, shat),
        e(J)     = K e^s (1 - Q(J+1, s)) = K sum_{j>J} s^j/j!,

    with Q the regularized upper incomplete gamma (integer order).  Both
    converge for every shat, s >= 0.  The tail is summed directly rather
    than through 1 - Q so that values near machine epsilon stay accurate.
    """
    shat, s = b.s_hat, b.s
    e_hat = (b.K / (2.0 * b.L)) * math.exp(shat) * shat**2 * gamma_upper_regularized(b.J + 1, shat)
    e_tail = b.K * _exp_tail(s, b.J)
    return BoundReport(e_hat, e_tail, shat, s, mode="gc")


def gc_simplified(b: BoundInputs) -> float:
    """Large-J simplification (K/2L) e^{shat} shat^2 (Q -> 1)."""
    return (b.K / (2.0 * b.L)) * math.exp(b.s_hat) * b.s_hat**2


def single_integral_error_bound(word_len: int, T: float, L: int, norm_u: float) -> float:
    """Asymptotic bound (T^j / L) * norm_u^j / (2 (j-2)!) on the difference
    between one iterated sum S_eta(L) and its iterated integral E_eta(T),
    where norm_u is the sup of |uhat/Delta| over steps and channels.

    Vacuous for words shorter than 2 (with exact increments the two sides
    coincide for j <= 1), hence DomainError there.  Halves when L doubles.
    """
    if word_len < 2:
        raise DomainError(f"single-integral bound needs |eta| >= 2, got {word_len}")
    if L < 1:
        raise DomainError(f"need L >= 1, got {L}")
    return (T**word_len / L) * norm_u**word_len / (2.0 * math.factorial(word_len - 2))


def seta_bound(word_len: int, N: int, R_hat: float) -> float:
    """|S_eta(N)| <= R_hat^|eta| * binomial(N-1+|eta|, |eta|) — one term per
    non-increasing index assignment, each at most R_hat^|eta|.  Achieved with
    equality by uhat identically R_hat."""
    if word_len < 0 or N < 0:
        raise DomainError("word length and step count must be nonnegative")
    return R_hat**word_len * math.comb(N - 1 + word_len, word_len)


def eeta_bound(eta: Word, channel_l1: Sequence[float]) -> float:
    """|E_eta(T)| <= prod_i U_i^{n_i} / n_i! where n_i counts letter i in eta
    and U_i is the L1 norm of channel i over [0, T] (U_0 = T).  Achieved with
    equality by constant-sign inputs."""
    for U in channel_l1:
        if U < 0:
            raise DomainError("channel L1 norms must be nonnegative")
    m = len(channel_l1) - 1
    for letter in eta:
        if not 0 <= letter <= m:
            raise DomainError(f"letter {letter} has no L1 norm among U_0..U_{m}")
    counts = word_length_counts(tuple(eta), m)
    out = 1.0
    for U, n in zip(channel_l1, counts):
        out *= U**n / math.factorial(n)
    return out


@dataclass(frozen=True)
class ConvergenceRegimes:
    continuous: str
    discrete: str
    #: for GC series the discrete side converges only locally; this is the
    #: increment-norm radius 1/(M(m+1)) inside which it does
    discrete_radius: Optional[float] = None


def classify_convergence(g: GrowthClass, m: int = 0) -> ConvergenceRegimes:
    """Which convergence regime the continuous and discrete functionals
    inherit from the coefficient growth class:

        LC               -> (LC, divergent)
        GC               -> (GC, LC) with radius ||uhat||_inf < 1/(M(m+1))
        FACTORIAL_DECAY  -> (at least GC, GC)
    """
    if g.kind is Growth.LC:
        return ConvergenceRegimes("LC", "divergent")
    if g.kind is Growth.GC:
        return ConvergenceRegimes("GC", "LC", discrete_radius=1.0 / (g.M * (m + 1)))
    return ConvergenceRegimes("at least GC", "GC")


def effective_alphabet(c: SeriesSpec) -> tuple[int, tuple[int, ...]]:
    """Effective controlled-letter count and the letters evaluation ranges
    over.  A series supported on q letters behaves like one over an alphabet
    of q letters, so the bound factor (m+1) becomes q: for a series in the
    single letter x_1, effectively m = 0."""
    letters = c.evaluation_letters()
    return max(len(letters) - 1, 0), letters


def regime_check(
    c: SeriesSpec,
    u: ContinuousInput,
    uhat: DiscreteInput,
    J: Optional[int] = None,
    ratio_min: float = 5.0,
) -> list[str]:
    """Advisory warnings about being outside the regions where the bounds
    are meaningful: the LC operator radius Rbar < 1/(M(m+1)), divergence of
    the LC bound formulas (s_hat or s >= 1), and the steps-per-order ratio
    L/J falling below ``ratio_min``.  Norms and m are taken over the series'
    effective alphabet."""
    if c.growth is None:
        raise DomainError("regime_check needs a declared growth class")
    m_eff, letters = effective_alphabet(c)
    M = c.growth.M
    factor = M * (m_eff + 1)
    Rbar = max(l1_norm(u), u.T)
    warnings = []
    if c.growth.kind is Growth.LC:
        if Rbar >= 1.0 / factor:
            warnings.append(
                f"Rbar = {Rbar:g} outside the operator convergence radius "
                f"1/(M(m+1)) = {1.0 / factor:g}"
            )
        shat = factor * uhat.L * uhat.sup_norm(letters)
        s = factor * Rbar
        if shat >= 1.0:
            warnings.append(f"s_hat = {shat:g} >= 1: LC bound formulas diverge")
        if s >= 1.0:
            warnings.append(f"s = {s:g} >= 1: LC tail bound diverges")
    if c.growth.kind is Growth.GC:
        radius = 1.0 / factor
        if uhat.sup_norm(letters) >= radius:
            warnings.append(
                f"||uhat||_inf = {uhat.sup_norm(letters):g} at or beyond the "
                f"discrete convergence radius {radius:g}"
            )
    if J is not None and J > 0 and uhat.L / J < ratio_min:
        warnings.append(
            f"L/J = {uhat.L / J:g} below {ratio_min:g}; the asymptotic bounds "
            "assume many steps per truncation order"
        )
    return warnings


def dt_tail_bound(g: GrowthClass, m: int, R_hat: float, N: int, J: int) -> float:
    """Upper bound on the discrete truncation error |F_hat - F_hat^J| at
    step N for a globally convergent series: the dropped words contribute at
    most

        sum_{j > J} K (M(m+1)R_hat)^j binomial(N-1+j, j),

    summed numerically to convergence (smallest terms added first).  Requires
    the ratio r = M(m+1)R_hat < 1; raises Divergent otherwise."""
    if g.kind is not Growth.GC:
        raise DomainError("the discrete tail bound applies to GC growth only")
    if m < 0 or N < 0 or J < 0 or R_hat < 0:
        raise DomainError("need m, N, J, R_hat >= 0")
    r = g.M * (m + 1) * R_hat
    if r >= 1.0:
        raise Divergent("M(m+1)R_hat", r)
    if r == 0.0 or N == 0:
        # no increments consumed yet: every nonempty word's sum is still 0
        return 0.0
    j = J + 1
    term = g.K * r**j * math.comb(N - 1 + j, j)
    terms = []
    while True:
        terms.append(term)
        term *= r * (N - 1 + j + 1) / (j + 1)
        j += 1
        if term <= 1e-17 * math.fsum(terms):
            break
        if j > J + 1_000_000:  # pragma: no cover - r would have to be ~1
            break
    return math.fsum(reversed(terms))
