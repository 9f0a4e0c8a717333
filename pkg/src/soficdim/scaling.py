"""Corner compression and dilation of candidate maps, plus the value identity.

A corner datum couples an ambient groupoid with a unit projection p of
rational mass (N-k)/N and k bisections whose domains sit inside p with
mass 1/N each and whose ranges tile the complement of p.  Candidates
travel both ways:

* expansion takes a candidate over the corner of degree d (with
  (N-k) | d) to one over the ambient of degree d' = N d / (N-k),
  gluing k new blocks to {1..d} through chosen bijections; the output
  is verified at delta' = 5 N^2 delta + 150 N^2 (2|F u S|+1)^(2(2n+5)) delta.

* restriction cuts an ambient candidate of degree d down to the fixed
  set of the image of p, adjusted to exactly floor(h(p) d) points, and
  is verified at 20 delta / h(p).

The closed identity s(ambient) - 1 = h(p) (s(corner) - 1) is exposed
as exact arithmetic in both directions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import pperm, sofic
from .groupoid import (
    CornerEmbedding,
    FiniteGroupoid,
    GroupoidError,
    PartialBisection,
    b_compose,
    b_inverse,
    corner_embedding,
    full_identity,
    projection_bisection,
    tau,
)
from .pperm import PartialPermutation
from .rng import SplitMix64
from .sofic import GroupoidSource, MembershipReport, SAParams, SoficCandidate


class CornerDataError(GroupoidError):
    """The corner datum violates one of its three exact conditions."""


@dataclass(frozen=True)
class CornerData:
    """Ambient groupoid, unit projection of mass (N-k)/N, and the k movers.

    Conditions validated exactly: dom(s_i) inside p with mass 1/N, and
    the ranges of the s_i tile the complement of p.
    """

    ambient: FiniteGroupoid
    p_units: frozenset
    S: tuple
    N: int
    k: int
    embedding: CornerEmbedding

    @property
    def h_p(self) -> Fraction:
        return Fraction(self.N - self.k, self.N)

    @property
    def corner(self) -> FiniteGroupoid:
        return self.embedding.groupoid

    def p_ambient(self) -> PartialBisection:
        return projection_bisection(self.ambient, self.p_units)

    def dom_projections_corner(self):
        """dom(s_i) s_i^-1 s_i as corner projections."""
        out = []
        for s in self.S:
            dom = b_compose(b_inverse(s), s)
            out.append(self.embedding.pull_back_bisection(dom))
        return out


def make_corner_data(g: FiniteGroupoid, p_units, S) -> CornerData:
    p_units = frozenset(p_units)
    if not p_units:
        raise CornerDataError("the corner needs a nonempty unit set")
    S = tuple(S)
    k = len(S)
    mass = sum((g.unit_weights[e] for e in sorted(p_units)), Fraction(0))
    if k == 0:
        if mass != 1:
            raise CornerDataError("with no movers the projection must be full")
        N = 1
    else:
        dom_masses = {tau(b_compose(b_inverse(s), s)) for s in S}
        if len(dom_masses) != 1:
            raise CornerDataError("mover domains must share one mass 1/N")
        inv_mass = next(iter(dom_masses))
        if inv_mass == 0 or (1 / inv_mass).denominator != 1:
            raise CornerDataError("mover domain mass must be 1/N for integer N")
        N = int(1 / inv_mass)
        if mass != Fraction(N - k, N):
            raise CornerDataError(
                f"projection mass {mass} is not (N-k)/N = {Fraction(N - k, N)}")
        covered = set()
        for s in S:
            for e in s.dom_units():
                if e not in p_units:
                    raise CornerDataError("mover domain leaves the projection")
            ran = s.ran_units()
            if ran & p_units:
                raise CornerDataError("mover range meets the projection")
            if ran & covered:
                raise CornerDataError("mover ranges overlap")
            covered |= ran
        if covered != set(range(g.n_units)) - p_units:
            raise CornerDataError("mover ranges do not tile the complement")
    return CornerData(g, p_units, S, N, k, corner_embedding(g, sorted(p_units)))


def standard_corner(g: FiniteGroupoid, p_units) -> CornerData:
    """Corner datum for a uniform-weight groupoid: one single-arrow mover
    per missing unit, sources assigned in sorted order."""
    p_units = sorted(set(p_units))
    n = g.n_units
    if len(set(g.unit_weights)) != 1:
        raise CornerDataError("standard corners need uniform unit weights")
    missing = [e for e in range(n) if e not in p_units]
    S = []
    for i, f in enumerate(missing):
        e = p_units[i % len(p_units)]
        arrows = [a for a in range(g.n_arrows)
                  if g.source[a] == e and g.range_[a] == f]
        if not arrows:
            raise CornerDataError(f"no arrow from unit {e} to unit {f}")
        S.append(PartialBisection(g, frozenset([min(arrows)])))
    return make_corner_data(g, p_units, S)


def corner_generating_set(cd: CornerData, extra=()):
    """A corner generating set containing the corner identity and every
    mover domain projection, as the constructions require."""
    corner_g = cd.corner
    out = [full_identity(corner_g)]
    for p in cd.dom_projections_corner():
        if p not in out:
            out.append(p)
    for s in extra:
        if s not in out:
            out.append(s)
    return out


def ambient_generating_set(cd: CornerData, F_corner):
    """The corner set pushed into the ambient groupoid, joined with the movers."""
    out = []
    for f in F_corner:
        amb = cd.embedding.embed_bisection(f)
        if amb not in out:
            out.append(amb)
    for s in cd.S:
        if s not in out:
            out.append(s)
    return out


def expansion_delta(cd: CornerData, F_corner, n: int, delta) -> Fraction:
    size = len(ambient_generating_set(cd, F_corner))
    N = cd.N
    return (5 * N ** 2 + 150 * N ** 2 * (2 * size + 1) ** (2 * (2 * n + 5))) \
        * Fraction(delta)


@dataclass(frozen=True)
class ExpandResult:
    candidate: SoficCandidate
    params: SAParams
    report: MembershipReport
    delta_prime: Fraction
    d_prime: int
    blocks: tuple  # A_0..A_k as sorted tuples
    b_sets: tuple  # B_1..B_k
    gammas: tuple  # the block bijections as partial permutations


def expand_sigma(sigma: SoficCandidate, cd: CornerData, F_corner, n: int,
                 delta, gamma_choice: str = "lex", seed: int = 0,
                 precheck: bool = True) -> ExpandResult:
    """Dilate a corner candidate to the ambient groupoid and verify it.

    The corner candidate must cover the radius 4n+5 ball over F_corner
    (which must contain the corner identity and the mover domain
    projections) and be a member there at delta; the degree d must be
    divisible by N-k.  New blocks A_1..A_k are glued to A_0 = {1..d}
    through bijections gamma_i from near-fixed sets B_i, chosen
    order-preservingly ("lex") or by seeded shuffle ("seeded").
    """
    delta = Fraction(delta)
    d = sigma.degree
    N, k = cd.N, cd.k
    if (N - k) == 0 or d % (N - k):
        raise ValueError(f"degree {d} is not divisible by N-k = {N - k}")
    corner_g = cd.corner
    ident_c = full_identity(corner_g)
    if ident_c not in F_corner:
        raise ValueError("F_corner must contain the corner identity")
    for p in cd.dom_projections_corner():
        if p not in F_corner:
            raise ValueError("F_corner must contain every mover domain projection")
    corner_src = GroupoidSource(corner_g, F_corner, 4 * n + 5)
    corner_params = SAParams(corner_src, 4 * n + 5, delta, d)
    if precheck:
        rep = sofic.verify_membership(sigma, corner_params)
        if not rep.is_member:
            raise ValueError(
                f"corner candidate is not a member at radius {4 * n + 5}: "
                f"mult gap {rep.mult_gap}, trace gap {rep.trace_gap}")
    corner_pos = {b: i for i, b in enumerate(corner_src.ball_elements)}

    d_prime = d * N // (N - k)
    block = d_prime // N
    blocks = [tuple(range(1, d + 1))]
    nxt = d + 1
    for _ in range(k):
        blocks.append(tuple(range(nxt, nxt + block)))
        nxt += block

    # near-fixed sets B_i from the images of the domain projections
    b_sets = []
    gammas = [PartialPermutation.projection(d_prime, range(1, d + 1))]
    rng = SplitMix64(seed)
    for i, s in enumerate(cd.S, start=1):
        dom_proj = cd.embedding.pull_back_bisection(b_compose(b_inverse(s), s))
        fix = [x for x in range(1, d + 1)
               if sigma.images[corner_pos[dom_proj]].images[x - 1] == x]
        if len(fix) >= block:
            b_i = fix[:block]
        else:
            fill = [x for x in range(1, d + 1) if x not in set(fix)]
            b_i = fix + fill[:block - len(fix)]
        sym_diff = len(set(fix) ^ set(b_i))
        if Fraction(sym_diff) >= delta * d_prime:
            raise ValueError(
                f"near-fixed set of mover {i} misses its block by {sym_diff} points")
        b_sets.append(tuple(b_i))
        targets = list(blocks[i])
        if gamma_choice == "seeded":
            rng.shuffle(targets)
        elif gamma_choice != "lex":
            raise ValueError("gamma_choice must be 'lex' or 'seeded'")
        images = [0] * d_prime
        for x, y in zip(sorted(b_i), targets):
            images[x - 1] = y
        gammas.append(PartialPermutation(d_prime, images))

    # projections r_0 = p, r_i = ran(s_i) cutting the ambient into blocks
    g = cd.ambient
    cut = [cd.p_ambient()]
    for s in cd.S:
        cut.append(b_compose(s, b_inverse(s)))
    movers = [cd.p_ambient()] + list(cd.S)

    F_amb = ambient_generating_set(cd, F_corner)
    amb_src = GroupoidSource(g, F_amb, n)
    delta_prime = expansion_delta(cd, F_corner, n, delta)
    amb_params = SAParams(amb_src, n, delta_prime, d_prime)

    def corner_image(f_amb: PartialBisection) -> PartialPermutation:
        f_c = cd.embedding.pull_back_bisection(f_amb)
        pos = corner_pos.get(f_c)
        if pos is None:
            raise ValueError(f"corner element {f_c!r} outside the candidate ball")
        return pperm.embed(sigma.images[pos], d_prime)

    def expand_element(u: PartialBisection) -> PartialPermutation:
        parts = []
        for i in range(k + 1):
            row = b_compose(cut[i], u)
            for j in range(k + 1):
                piece = b_compose(row, cut[j])
                if not piece.arrows:
                    continue
                f_amb = b_compose(b_compose(b_inverse(movers[i]), piece), movers[j])
                inner = corner_image(f_amb)
                part = pperm.compose(gammas[i],
                                     pperm.compose(inner, pperm.inverse(gammas[j])))
                parts.append(part)
        return pperm.orthogonal_sum(parts, degree=d_prime)

    images = [expand_element(u) for u in amb_src.ball_elements]
    cand = SoficCandidate(d_prime, images)
    report = sofic.verify_membership(cand, amb_params)
    return ExpandResult(cand, amb_params, report, delta_prime, d_prime,
                        tuple(blocks), tuple(b_sets), tuple(gammas))


@dataclass(frozen=True)
class RestrictResult:
    candidate: SoficCandidate
    params: SAParams
    report: MembershipReport
    delta_prime: Fraction
    d_prime: int
    B: tuple
    p_distance: Fraction  # |sigma(p) - p_B|


def restrict_sigma(sigma: SoficCandidate, cd: CornerData, F_corner, n: int,
                   delta, precheck: bool = True) -> RestrictResult:
    """Cut an ambient candidate down to the corner and verify it.

    The candidate must cover the radius n+4 ball over the ambient set
    (corner set plus movers) and be a member there at delta, with
    d' = floor(h(p) d) > 1/delta.  The base set B starts from the fixed
    points of the image of p and is extended by the smallest absent
    indices or shrunk by its smallest members to exactly d' points.
    """
    delta = Fraction(delta)
    d = sigma.degree
    h_p = cd.h_p
    d_prime = int(h_p * d)
    if d_prime * delta <= 1:
        raise ValueError(f"d' = {d_prime} must exceed 1/delta = {1 / delta}")
    g = cd.ambient
    F_amb = ambient_generating_set(cd, F_corner)
    amb_src = GroupoidSource(g, F_amb, n + 4)
    amb_params = SAParams(amb_src, n + 4, delta, d)
    if precheck:
        rep = sofic.verify_membership(sigma, amb_params)
        if not rep.is_member:
            raise ValueError(
                f"ambient candidate is not a member at radius {n + 4}: "
                f"mult gap {rep.mult_gap}, trace gap {rep.trace_gap}")
    amb_pos = {b: i for i, b in enumerate(amb_src.ball_elements)}

    p_amb = cd.p_ambient()
    if p_amb not in amb_pos:
        raise ValueError("the image of p is not covered by the candidate")
    sig_p = sigma.images[amb_pos[p_amb]]
    b0 = [x for x in range(1, d + 1) if sig_p.images[x - 1] == x]
    if len(b0) >= d_prime:
        B = sorted(b0)[len(b0) - d_prime:]  # shrink by removing smallest
    else:
        absent = [x for x in range(1, d + 1) if x not in set(b0)]
        B = sorted(b0 + absent[:d_prime - len(b0)])
    B = sorted(B)
    p_b = PartialPermutation.projection(d, B)
    p_distance = pperm.uniform_distance(sig_p, p_b)

    corner_src = GroupoidSource(cd.corner, F_corner, n)
    delta_prime = 20 * delta / h_p
    corner_params = SAParams(corner_src, n, delta_prime, d_prime)

    def restrict_element(f_c: PartialBisection) -> PartialPermutation:
        f_amb = cd.embedding.embed_bisection(f_c)
        pos = amb_pos.get(f_amb)
        if pos is None:
            raise ValueError(f"ambient element {f_amb!r} outside the candidate ball")
        return pperm.reindex(sigma.images[pos], B)

    images = [restrict_element(f) for f in corner_src.ball_elements]
    cand = SoficCandidate(d_prime, images)
    report = sofic.verify_membership(cand, corner_params)
    return RestrictResult(cand, corner_params, report, delta_prime, d_prime,
                          tuple(B), p_distance)


# -- the closed identity ----------------------------------------------------------


def scaling_value(s_corner, h_p):
    """s over the ambient from s over the corner: h_p (s_corner - 1) + 1."""
    h_p = Fraction(h_p)
    if not 0 < h_p <= 1:
        raise ValueError("the projection mass must lie in (0, 1]")
    if isinstance(s_corner, float):
        return float(h_p) * (s_corner - 1.0) + 1.0
    return h_p * (Fraction(s_corner) - 1) + 1


def scaling_value_inverse(s_ambient, h_p):
    """s over the corner from s over the ambient: (s_ambient - 1)/h_p + 1."""
    h_p = Fraction(h_p)
    if not 0 < h_p <= 1:
        raise ValueError("the projection mass must lie in (0, 1]")
    if isinstance(s_ambient, float):
        return (s_ambient - 1.0) / float(h_p) + 1.0
    return (Fraction(s_ambient) - 1) / h_p + 1
