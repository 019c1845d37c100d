"""Discrete-time jump unravelling of repeated system-environment interactions.

A macroscopic subsystem M couples to a fresh environment factor in each time
interval ("ticker tape").  Each interval is summarized by a trace-preserving
channel whose Kraus basis is fixed, branch by branch, by the requirement that
the branch images are mutually orthogonal; the branch probabilities are the
squared norms of the images.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import hilbert
from .hilbert import CompositeSpace, dag

UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class InteractionStep:
    """One interval of unitary coupling between M and a fresh environment factor."""

    U: np.ndarray          # unitary on M (x) E_n, M is the slow index
    env_dim: int
    env_init: np.ndarray   # fresh environment state

    def __post_init__(self):
        d = self.U.shape[0]
        err = np.abs(dag(self.U) @ self.U - np.eye(d)).max()
        if err > UNITARITY_TOL:
            raise ValueError(f"interaction is not unitary (deviation {err:.2e})")
        if len(self.env_init) != self.env_dim:
            raise ValueError("env_init does not match env_dim")

    @property
    def sys_dim(self) -> int:
        return self.U.shape[0] // self.env_dim


@dataclass
class KrausSet:
    ops: list[np.ndarray]
    probs: np.ndarray | None = None
    degenerate: bool = False

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    def completeness_defect(self) -> float:
        acc = sum(dag(k) @ k for k in self.ops)
        return float(np.abs(acc - np.eye(self.dim)).max())

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ dag(k) for k in self.ops)


@dataclass
class BranchNode:
    label: tuple[int, ...]
    state: np.ndarray       # unnormalized; norm^2 is the branch probability
    prob: float
    children: list["BranchNode"] = field(default_factory=list)

    def leaves(self) -> list["BranchNode"]:
        if not self.children:
            return [self]
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def to_record(self) -> dict:
        return {
            "label": list(self.label),
            "prob": self.prob,
            "state_re": [float(x) for x in self.state.real],
            "state_im": [float(x) for x in self.state.imag],
        }


@dataclass
class RateMatrix:
    omega: np.ndarray       # omega[a, b], units 1/time
    rates: np.ndarray       # rates[a, b] = r_{b -> a}
    probs: np.ndarray
    degenerate: bool = False


def schmidt_rate_matrix(
    psi: np.ndarray, h_int: np.ndarray, space: CompositeSpace, hbar: float = 1.0
) -> RateMatrix:
    """Instantaneous jump rates between the Schmidt components of ``psi``.

    omega[a, b] = <M_a E_a| H_I |M_b E_b> / (i hbar) with the weights absorbed
    into the system-side vectors; dp_a/dt = sum_b (omega[a,b] - omega[b,a]) and
    the transition rate b -> a is [omega_ab - omega_ba]^+ / p_b.
    """
    if not hilbert.is_hermitian(h_int):
        raise hilbert.NonHermitianError("interaction Hamiltonian must be Hermitian")
    coeffs, lefts, rights, degenerate = hilbert.schmidt_decompose(psi, space)
    k = len(coeffs)
    # total-space Schmidt vectors with weights on the system side
    total = np.array([np.kron(lefts[a], rights[a]) for a in range(k)])
    h_psi = np.array([h_int @ total[a] for a in range(k)])
    omega = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            amp = coeffs[a] * coeffs[b] * np.vdot(total[a], h_psi[b])
            omega[a, b] = (amp / (1j * hbar)).real
    probs = coeffs**2
    rates = np.zeros_like(omega)
    for a in range(k):
        for b in range(k):
            if a == b or probs[b] <= 1e-300:
                continue
            rates[a, b] = max(omega[a, b] - omega[b, a], 0.0) / probs[b]
    return RateMatrix(omega=omega, rates=rates, probs=probs, degenerate=degenerate)


def kraus_from_interaction(
    step: InteractionStep, env_basis: np.ndarray | None = None
) -> KrausSet:
    """Extract Kraus operators K_a = <E_a| U |E_0> for an environment basis."""
    de = step.env_dim
    dm = step.sys_dim
    if env_basis is None:
        env_basis = np.eye(de, dtype=complex)
    else:
        env_basis = np.asarray(env_basis, dtype=complex)
        gram = env_basis.conj() @ env_basis.T
        if np.abs(gram - np.eye(len(env_basis))).max() > 1e-10 or len(env_basis) != de:
            raise ValueError("environment basis must be orthonormal and complete")
    u4 = step.U.reshape(dm, de, dm, de)
    # K_a[m, n] = sum_{e, e'} conj(basis[a, e]) U[m e, n e'] env_init[e']
    with_init = np.tensordot(u4, step.env_init, axes=([3], [0]))  # (dm, de, dm)
    ops = [np.tensordot(env_basis[a].conj(), with_init, axes=([0], [1])) for a in range(de)]
    ks = KrausSet(ops=ops)
    if ks.completeness_defect() > 1e-9:
        raise ValueError("extracted Kraus set is not complete")
    return ks


def orthogonality_fix(
    kraus: KrausSet, psi0: np.ndarray, degeneracy_gap: float = 1e-8
) -> KrausSet:
    """Rotate a Kraus set so its images on a pure reference state are orthogonal.

    The rotated set satisfies Tr(K_a rho0 K_b^dag) = p_a delta_ab with
    rho0 = |psi0><psi0| and leaves the channel itself unchanged.  Probabilities
    come out sorted descending; the residual per-operator phase is fixed by
    making the largest-magnitude image component real positive.
    """
    images = np.array([k @ psi0 for k in kraus.ops])
    gram = images.conj() @ images.T          # G[a, b] = <w_a | w_b>
    vals, w = np.linalg.eigh(gram)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    w = w[:, order]
    new_ops = []
    for a in range(len(kraus.ops)):
        op = sum(w[b, a] * kraus.ops[b] for b in range(len(kraus.ops)))
        img = op @ psi0
        k = int(np.argmax(np.abs(img)))
        if np.abs(img[k]) > 1e-14:
            op = op * (np.abs(img[k]) / img[k])
        new_ops.append(op)
    degenerate = bool(np.any(np.abs(np.diff(vals)) < degeneracy_gap))
    return KrausSet(ops=new_ops, probs=np.clip(vals, 0.0, None), degenerate=degenerate)


@dataclass
class TickerTapeResult:
    tree: BranchNode
    trajectory: list[BranchNode]    # sampled path, root first
    outcomes: list[int]


def run_ticker_tape(
    m0: np.ndarray,
    steps: list[InteractionStep],
    rng: np.random.Generator | int,
    prune_below: float = 1e-12,
) -> TickerTapeResult:
    """Expand the full branch tree for a sequence of fresh-environment steps
    and sample one conditioned trajectory through it.

    Each step's Kraus basis is re-fixed per branch against that branch's
    normalized state, so sibling images are orthogonal and leaf probabilities
    sum to one.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    root = BranchNode(label=(), state=np.asarray(m0, dtype=complex), prob=1.0)
    frontier = [root]
    for step in steps:
        new_frontier = []
        for node in frontier:
            if node.prob <= prune_below:
                continue
            psi = node.state / np.sqrt(node.prob)
            fixed = orthogonality_fix(kraus_from_interaction(step), psi)
            for a, op in enumerate(fixed.ops):
                child_state = op @ node.state
                p = float(np.vdot(child_state, child_state).real)
                child = BranchNode(label=(a,) + node.label, state=child_state, prob=p)
                node.children.append(child)
                new_frontier.append(child)
        frontier = new_frontier
    # sample a trajectory by walking the tree with conditional probabilities
    path = [root]
    outcomes = []
    node = root
    while node.children:
        probs = np.array([c.prob for c in node.children])
        cond = probs / probs.sum()
        a = int(rng.choice(len(cond), p=cond))
        outcomes.append(a)
        node = node.children[a]
        path.append(node)
    return TickerTapeResult(tree=root, trajectory=path, outcomes=outcomes)


def sample_ticker_outcomes(
    m0: np.ndarray,
    steps: list[InteractionStep],
    n_samples: int,
    seed: int,
) -> np.ndarray:
    """Outcome strings of ``n_samples`` independent ticker-tape trajectories."""
    out = np.empty((n_samples, len(steps)), dtype=np.int64)
    for k in range(n_samples):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
        out[k] = run_ticker_tape(m0, steps, rng).outcomes
    return out


def unconditioned_from_tree(tree: BranchNode) -> np.ndarray:
    leaves = tree.leaves()
    dim = len(leaves[0].state)
    rho = np.zeros((dim, dim), dtype=complex)
    for leaf in leaves:
        rho += np.outer(leaf.state, leaf.state.conj())
    return rho


def tree_to_ndjson(tree: BranchNode) -> str:
    """One JSON object per branch node, breadth first."""
    lines = []
    frontier = [tree]
    while frontier:
        nxt = []
        for node in frontier:
            lines.append(json.dumps(node.to_record()))
            nxt.extend(node.children)
        frontier = nxt
    return "\n".join(lines) + "\n"


@dataclass
class SectorReport:
    max_cross_norm: float
    cross_norms: dict[tuple[int, int], float]
    inter_sector_rate_max: float
    passes: bool


def branch_schmidt_check(
    psi: np.ndarray,
    h_int: np.ndarray,
    space: CompositeSpace,
    sectors: list[list[int]],
    coupling_threshold: float,
    hbar: float = 1.0,
) -> SectorReport:
    """Check that an environment-sector partition block-diagonalizes H_I.

    For every pair of basis states in different sectors the operator
    A = <phi| H_I |chi> acting on the system is formed; the report carries the
    maximum Frobenius norm over such pairs and the largest jump rate between
    Schmidt components supported in different sectors.
    """
    dm, de = space.factor_dims
    h4 = h_int.reshape(dm, de, dm, de)
    cross = {}
    max_norm = 0.0
    for u, su in enumerate(sectors):
        for v, sv in enumerate(sectors):
            if u >= v:
                continue
            worst = 0.0
            for e1 in su:
                for e2 in sv:
                    a = h4[:, e1, :, e2]
                    worst = max(worst, float(np.linalg.norm(a)))
            cross[(u, v)] = worst
            max_norm = max(max_norm, worst)
    rm = schmidt_rate_matrix(psi, h_int, space, hbar=hbar)
    _, _, rights, _ = hilbert.schmidt_decompose(psi, space)
    # assign each Schmidt environment vector to its dominant sector
    assignment = []
    for r in rights:
        weights = [float(np.sum(np.abs(r[list(s)]) ** 2)) for s in sectors]
        assignment.append(int(np.argmax(weights)))
    inter_max = 0.0
    k = len(assignment)
    for a in range(k):
        for b in range(k):
            if assignment[a] != assignment[b]:
                inter_max = max(inter_max, float(rm.rates[a, b]))
    return SectorReport(
        max_cross_norm=max_norm,
        cross_norms=cross,
        inter_sector_rate_max=inter_max,
        passes=bool(max_norm / hbar < coupling_threshold),
    )


# ---------------------------------------------------------------------------
# Two-outcome measurement model: a pointer M is rotated conditionally on the
# state of a fresh qubit prepared as sqrt(c1sq)|0> + sqrt(1-c1sq)|1>.


def measurement_interaction(c1sq: float, fraction: float = 1.0) -> InteractionStep:
    """Pointer-measurement step; at fraction 1 outcomes have probabilities
    (c1sq, 1 - c1sq)."""
    if not 0.0 <= c1sq <= 1.0:
        raise ValueError("c1sq must lie in [0, 1]")
    sy = np.array([[0.0, -1j], [1j, 0.0]])
    p1 = np.diag([0.0, 1.0]).astype(complex)
    h = np.kron(sy, p1)         # rotate M when the probe qubit is |1>
    u = scipy.linalg.expm(-1j * (np.pi / 2) * fraction * h)
    env_init = np.array([np.sqrt(c1sq), np.sqrt(1.0 - c1sq)], dtype=complex)
    return InteractionStep(U=u, env_dim=2, env_init=env_init)


def eigenvalue_flow(c1sq: float, n_times: int = 51) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the pointer's reduced density matrix through the
    measurement interval; starts at (1, 0) and ends sorted as
    (max, min) of (c1sq, 1-c1sq)."""
    times = np.linspace(0.0, 1.0, n_times)
    space = CompositeSpace((2, 2))
    m0 = np.array([1.0, 0.0], dtype=complex)
    flows = np.zeros((n_times, 2))
    for i, s in enumerate(times):
        step = measurement_interaction(c1sq, fraction=float(s))
        psi = step.U @ np.kron(m0, step.env_init)
        rho_m = hilbert.partial_trace(hilbert.projector(psi), space, keep=0)
        flows[i] = np.sort(np.linalg.eigvalsh(rho_m))[::-1]
    return times, flows


def simulate_rate_jumps(
    c1sq: float, n_substeps: int, n_traj: int, seed: int
) -> np.ndarray:
    """Euler sub-stepped jump simulation of the measurement using the
    instantaneous Schmidt rates; returns the final Schmidt index per
    trajectory (0 = dominant branch)."""
    space = CompositeSpace((2, 2))
    m0 = np.array([1.0, 0.0], dtype=complex)
    ds = 1.0 / n_substeps
    outcomes = np.empty(n_traj, dtype=np.int64)
    # precompute rate matrices along the interval
    rates = []
    for k in range(n_substeps):
        s = (k + 0.5) * ds
        step = measurement_interaction(c1sq, fraction=float(s))
        psi = step.U @ np.kron(m0, step.env_init)
        rates.append(schmidt_rate_matrix(psi, _flow_hamiltonian(), space).rates)
    for t in range(n_traj):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
        a = 0
        for k in range(n_substeps):
            r = rates[k]
            total = r[:, a].sum()
            if rng.random() < total * ds * (np.pi / 2):
                # the generator below runs in the rotated-angle variable; the
                # pi/2 factor converts rate per unit fraction
                weights = r[:, a] / total
                a = int(rng.choice(len(weights), p=weights))
        outcomes[t] = a
    return outcomes


def _flow_hamiltonian() -> np.ndarray:
    sy = np.array([[0.0, -1j], [1j, 0.0]])
    p1 = np.diag([0.0, 1.0]).astype(complex)
    return np.kron(sy, p1)
