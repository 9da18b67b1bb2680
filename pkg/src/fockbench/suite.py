"""
Verification suites and the trial orchestrator.

Each suite is a set of checks evaluated once per trial on seeded random
instances; deterministic worked examples run in trial 0 only. A check never
raises: an exception inside it becomes a failing record carrying the error.
"""

import asyncio
import logging
import math
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Union

import numpy as np
import scipy.sparse as sp

from .autgroup import (
    alpha_generator_images,
    ball_offset,
    column_norm_deficits,
    generator_images,
    implementation_residuals,
    implementing_unitary,
    junitary_form,
    make_junitary,
    phi,
    system_on_coefficients,
    unitary_form,
    vacuum_column,
)
from .config import WorkbenchSettings, get_settings, set_settings
from .constrained import (
    commutator_generators,
    constrained_creation,
    constrained_poisson,
    constraint_norm,
    explicit_subspace,
    ideal_subspace,
    invariance_residual,
    nu_span_rank,
    subspace_distance,
    symmetrizer,
    theorem62_residuals,
    transported_constraint_norm,
    transported_polynomial_residual,
)
from .exceptions import ValidationError, WellPosednessError
from .fock import (
    creation_matrices,
    export_matrix,
    flip_matrix,
    fock_dim,
    lambda_powers,
    load_matrix,
    nilpotent_solve,
    nu_lambda,
    pencil,
)
from .linop import (
    as_dense,
    build_structured_unitary,
    closest_unitary,
    defect,
    factor_structured_unitary,
    isometry_residual,
    op_norm,
    unitarity_residual,
)
from .models import CheckRecord, CoefficientRow, MobiusDemo, ResidualRow, RunConfig
from .redheffer import BlockSystem2x2, alpha, redheffer_product
from .rowcon import (
    RowContraction,
    char_function,
    defect_identity_residual,
    functional_calculus,
    is_cnc,
    is_multianalytic,
    kernel_isometry_residual,
    level_structure_residual,
    poisson_kernel,
    redheffer_realization,
)
from .sampling import SYSTEM_KINDS, InstanceSampler, suite_salt
from .transform import (
    apply_automorphism,
    apply_inverse_automorphism,
    associativity_residual,
    defect_intertwiners,
    first_row_residuals,
    shifted_realization_residuals,
    theorem51_residuals,
    transport_margin,
)
from .words import (
    Word,
    commutator_polynomial,
    concat,
    enumerate_words,
    index_of,
    reverse,
    word,
    word_at,
    word_count,
)

logger = logging.getLogger(__name__)

# Exhaustive word checks stop at the largest level with at most this many words
_EXHAUSTIVE_WORDS = 4096
R_LIMIT_RADII = (0.9, 0.99, 0.999)
# Levels the scalar demo may add above N while the residuals converge
_DEMO_EXTRA_LEVELS = 120

# Invariant -> "suite.check" names that measure it
COVERAGE: Dict[str, List[str]] = {
    "words: word count per truncation": ["words.word_count"],
    "words: index_of increasing along enumeration": ["words.graded_order", "words.index_roundtrip"],
    "words: reversal involution and concat anti-homomorphism": [
        "words.reverse_involution",
        "words.reverse_antihomomorphism",
        "words.concat_associative",
    ],
    "fock: compression exactness": ["fock.compression_exact", "fock.creation_isometry"],
    "fock: flip identities": ["fock.flip_involution", "fock.right_equals_flip_left"],
    "fock: nu_lambda norm and eigenrelations": [
        "fock.nu_norm",
        "fock.nu_eigen_left",
        "fock.nu_eigen_right",
    ],
    "fock: <L_w nu, nu> tail bound": ["fock.nu_moment_tail"],
    "linop: D^2 + C*C = I and D commutes with C*C": [
        "linop.defect_identity",
        "linop.defect_commutes",
        "linop.defect_example",
    ],
    "linop: C D_C = D_C* C": ["linop.defect_intertwining"],
    "linop: structured unitary build/factor": [
        "linop.structured_unitarity",
        "linop.factor_roundtrip",
        "linop.factor_recovers_intertwiners",
        "linop.structured_example",
    ],
    "redheffer: unit law": ["redheffer.unit_law"],
    "redheffer: inverse law": ["redheffer.inverse_law"],
    "redheffer: associativity": ["redheffer.associativity"],
    "redheffer: class preservation": [f"redheffer.class_{kind}" for kind in SYSTEM_KINDS]
    + ["redheffer.alpha_contraction"],
    "redheffer: worked examples and well-posedness": [
        "redheffer.scalar_example",
        "redheffer.alpha_example",
        "redheffer.alpha_zero",
        "redheffer.wellposedness_rejected",
    ],
    "autgroup: J-unitarity and unitary form": [
        "autgroup.junitary_form",
        "autgroup.unitary_form_unitary",
        "autgroup.form_roundtrip",
    ],
    "autgroup: phi group law and kernel": [
        "autgroup.phi_group_law",
        "autgroup.phi_inverse",
        "autgroup.phi_kernel",
        "autgroup.phi_matches_alpha",
    ],
    "autgroup: alpha(L_Y, L) = U L U* on the compressed block": [
        "autgroup.alpha_images_exact",
        "autgroup.implementation_left",
    ],
    "autgroup: U R U* is a right multiplier": ["autgroup.implementation_right"],
    "autgroup: Phi_X^{-1} = alpha(L_Y*)": ["autgroup.inverse_images"],
    "autgroup: U F = F U and X = I gives U = I": [
        "autgroup.flip_commutes",
        "autgroup.identity_implementation",
    ],
    "autgroup: vacuum identities": [
        "autgroup.vacuum_column_identity",
        "autgroup.vacuum_row_identity",
        "autgroup.vacuum_deficit",
        "autgroup.mobius_vacuum_example",
    ],
    "rowcon: defect identity with geometric decay": [
        "rowcon.defect_identity",
        "rowcon.defect_identity_decay",
    ],
    "rowcon: r-limits": ["rowcon.r_limits"],
    "rowcon: lower-triangular multianalytic structure": [
        "rowcon.level_structure",
        "rowcon.multianalytic",
    ],
    "rowcon: Poisson kernel isometry": ["rowcon.kernel_isometry"],
    "rowcon: code paths agree": [
        "rowcon.kernel_methods",
        "rowcon.char_methods",
        "rowcon.realization_kernel",
        "rowcon.realization_theta",
    ],
    "rowcon: classical n = 1 reduction": ["rowcon.classical_theta", "rowcon.classical_kernel"],
    "transform: group compatibility": [
        "transform.group_compatibility",
        "transform.diagonal_oracle",
    ],
    "transform: inverse compatibility": ["transform.inverse_compatibility"],
    "transform: contractivity preservation": [
        "transform.contractivity",
        "transform.strict_preserved",
    ],
    "transform: associativity route": ["transform.associativity"],
    "transform: first row of L_X o L_1": [
        "transform.first_row_vacuum",
        "transform.first_row_shift",
    ],
    "transform: transport law with geometric decay": [
        "transform.transport_theta",
        "transform.transport_kernel",
        "transform.transport_decay_theta",
        "transform.transport_decay_kernel",
        "transform.intertwiner_unitarity",
        "transform.mobius_scalar",
        "transform.mobius_scalar_converged",
    ],
    "transform: transport law for strongly hyperbolic automorphisms": [
        "transform.hyperbolic_transport_theta",
        "transform.hyperbolic_transport_kernel",
        "transform.hyperbolic_transport_decay_theta",
        "transform.hyperbolic_transport_decay_kernel",
    ],
    "constrained: N_J invariant under U_X": ["constrained.symmetric_invariance"],
    "constrained: transported polynomials": [
        "constrained.transported_polynomial",
        "constrained.constraint_transport",
    ],
    "constrained: symmetrizer equals span of nu_lambda": [
        "constrained.nu_span_rank",
        "constrained.nu_in_symmetric",
    ],
    "constrained: constrained creations commute": ["constrained.constrained_creations_commute"],
    "constrained: ideal closure matches symmetrizer": [
        "constrained.ideal_matches_symmetrizer",
        "constrained.symmetrizer_rank",
    ],
    "constrained: constrained transport law": [
        "constrained.transport_theta",
        "constrained.transport_kernel",
        "constrained.transport_decay_theta",
        "constrained.transport_decay_kernel",
        "constrained.hyperbolic_transport_theta",
        "constrained.hyperbolic_transport_kernel",
    ],
}


class Outcome(NamedTuple):
    """A residual with an optional check-specific tolerance and predicted scale."""

    residual: float
    tolerance: Optional[float] = None
    predicted_scale: Optional[float] = None


Measurement = Union[float, Outcome]


def _attempt(fn: Callable[[], Any]) -> Any:
    """Evaluate fn, returning the exception instead of raising it."""
    try:
        return fn()
    except Exception as e:
        return e


def _unwrap(value: Any) -> Any:
    if isinstance(value, Exception):
        raise value
    return value


def _max_entry(M: Any) -> float:
    if sp.issparse(M):
        return float(abs(M).max()) if M.nnz else 0.0
    M = np.asarray(M)
    return float(np.abs(M).max()) if M.size else 0.0


def _exhaustive_level(n: int, N: int) -> int:
    level = N
    while level > 0 and fock_dim(n, level) > _EXHAUSTIVE_WORDS:
        level -= 1
    return level


class TrialRecorder:
    """Collects the records of one (suite, trial) pair."""

    def __init__(
        self, suite: str, trial: int, params: Dict[str, Any], include_timings: bool = False
    ) -> None:
        self.suite = suite
        self.trial = trial
        self.params = params
        self.include_timings = include_timings
        self.records: List[CheckRecord] = []

    def check(
        self,
        name: str,
        fn: Callable[[], Measurement],
        tolerance: Optional[float] = None,
        **params: Any,
    ) -> CheckRecord:
        """Evaluate one check and append its record."""
        merged = {**self.params, **params}
        start = time.perf_counter()
        try:
            value = fn()
            if not isinstance(value, Outcome):
                value = Outcome(float(value))
            limit = value.tolerance if value.tolerance is not None else tolerance
            if limit is None:
                raise ValidationError(f"Check {name} has no tolerance", field="tolerance")
            record = CheckRecord.measure(
                self.suite,
                name,
                self.trial,
                value.residual,
                limit,
                value.predicted_scale,
                **merged,
            )
        except Exception as e:
            logger.debug(f"{self.suite}.{name} (trial {self.trial}) raised {type(e).__name__}: {e}")
            record = CheckRecord.failure(self.suite, name, self.trial, e, **merged)
        if self.include_timings:
            elapsed = (time.perf_counter() - start) * 1000
            record = record.model_copy(update={"wall_time_ms": round(elapsed, 3)})
        if not record.passed:
            logger.warning(
                f"{self.suite}.{name} failed in trial {self.trial}: "
                f"residual {record.residual:.3e} > {record.tolerance:.3e}"
            )
        self.records.append(record)
        return record


class VerificationSuite:
    """Runs the selected suites for every trial and reduces the records in order."""

    def __init__(
        self, config: RunConfig, settings: Optional[WorkbenchSettings] = None
    ) -> None:
        self.config = config
        base = settings if settings is not None else get_settings()
        self.settings = base.scaled(config.tol_scale) if config.tol_scale != 1.0 else base
        self.workers = config.workers or self.settings.max_workers
        self._suites: Dict[str, Callable[[TrialRecorder, InstanceSampler], None]] = {
            "words": self._words,
            "fock": self._fock,
            "linop": self._linop,
            "redheffer": self._redheffer,
            "autgroup": self._autgroup,
            "rowcon": self._rowcon,
            "transform": self._transform,
            "constrained": self._constrained,
        }

    @property
    def dense_level(self) -> int:
        return min(self.config.level, self.settings.dense_level)

    @property
    def dense_margin(self) -> int:
        return min(self.config.margin, self.dense_level - 2)

    def _params(self, trial: int) -> Dict[str, Any]:
        c = self.config
        return {"n": c.n, "m": c.m, "N": c.level, "B": c.margin, "r": c.r, "seed": c.seed ^ trial}

    def run_trial(self, suite: str, trial: int) -> List[CheckRecord]:
        """All records of one suite for one trial."""
        sampler = InstanceSampler(self.config.seed, trial, suite_salt(suite))
        recorder = TrialRecorder(suite, trial, self._params(trial), self.config.include_timings)
        self._suites[suite](recorder, sampler)
        logger.debug(f"Suite {suite} trial {trial}: {len(recorder.records)} records")
        return recorder.records

    async def run_async(self) -> List[CheckRecord]:
        """
        Run every (suite, trial) pair in worker threads.

        At most `workers` trials run at once; records come back in
        (suite order, trial index) order regardless of completion order.
        """
        jobs = [
            (suite, trial) for suite in self.config.suites for trial in range(self.config.trials)
        ]
        logger.info(
            f"Running {len(jobs)} trials over suites {', '.join(self.config.suites)} "
            f"with {self.workers} workers"
        )
        previous = get_settings()
        set_settings(self.settings)
        try:
            semaphore = asyncio.Semaphore(self.workers)

            async def run_single(suite: str, trial: int) -> List[CheckRecord]:
                async with semaphore:
                    return await asyncio.to_thread(self.run_trial, suite, trial)

            batches = await asyncio.gather(*(run_single(s, t) for s, t in jobs))
        finally:
            set_settings(previous)

        records = [record for batch in batches for record in batch]
        failed = sum(not record.passed for record in records)
        logger.info(f"Collected {len(records)} records, {failed} failed")
        return records

    def run(self) -> List[CheckRecord]:
        return asyncio.run(self.run_async())

    def _decay(self, old: float, new: float, factor: float) -> Outcome:
        """new <= (factor + slack) old, or new below the roundoff floor."""
        s = self.settings
        return Outcome(new, max((factor + s.decay_slack) * old, s.roundoff_floor), factor * old)

    def _dump(
        self, rec: TrialRecorder, role: str, M: Any, n: int, N: int, coeff_dim: int = 1
    ) -> None:
        if not self.config.dump_artifacts or rec.trial != 0:
            return
        target = Path(self.config.dump_artifacts) / f"{rec.suite}_{role}"

        def roundtrip() -> float:
            descriptor = export_matrix(M, target, n, N, coeff_dim=coeff_dim, role=role)
            return _max_entry(load_matrix(descriptor) - as_dense(M))

        rec.check("artifact_roundtrip", roundtrip, 0.0, role=role)

    # ------------------------------------------------------------------ words

    def _words(self, rec: TrialRecorder, sampler: InstanceSampler) -> None:
        n, N = self.config.n, self.config.level
        if rec.trial == 0:
            level = _exhaustive_level(n, N)
            words = _attempt(lambda: enumerate_words(n, level))

            def count() -> float:
                expected = level + 1 if n == 1 else (n ** (level + 1) - 1) // (n - 1)
                return abs(len(_unwrap(words)) - expected) + abs(word_count(n, level) - expected)

            def graded_order() -> float:
                keys = [(len(w), w.letters) for w in _unwrap(words)]
                return sum(a >= b for a, b in zip(keys, keys[1:]))

            def index_roundtrip() -> float:
                bad = 0
                for i, w in enumerate(_unwrap(words)):
                    bad += index_of(w, level) != i or word_at(i, n, level) != w
                return bad

            rec.check("word_count", count, 0.0, level=level)
            rec.check("graded_order", graded_order, 0.0, level=level)
            rec.check("index_roundtrip", index_roundtrip, 0.0, level=level)

        def random_word() -> Word:
            length = int(sampler.rng.integers(0, N // 2 + 1))
            letters = sampler.rng.integers(1, n + 1, size=length)
            return Word(letters=tuple(int(v) for v in letters), n=n)

        triples = [(random_word(), random_word(), random_word()) for _ in range(16)]
        rec.check(
            "reverse_involution",
            lambda: sum(reverse(reverse(u)) != u for u, _, _ in triples),
            0.0,
        )
        rec.check(
            "reverse_antihomomorphism",
            lambda: sum(
                reverse(concat(u, v)) != concat(reverse(v), reverse(u)) for u, v, _ in triples
            ),
            0.0,
        )
        rec.check(
            "concat_associative",
            lambda: sum(
                concat(concat(u, v), w) != concat(u, concat(v, w))
                or len(concat(u, v)) != len(u) + len(v)
                for u, v, w in triples
            ),
            0.0,
        )

    # ------------------------------------------------------------------- fock

    def _fock(self, rec: TrialRecorder, sampler: InstanceSampler) -> None:
        n, N = self.config.n, self.config.level
        s = self.settings
        lefts = creation_matrices("left", n, N, sparse=True)
        rights = creation_matrices("right", n, N, sparse=True)

        if rec.trial == 0:
            F = flip_matrix(n, N, sparse=True)
            eye = sp.identity(fock_dim(n, N), dtype=complex, format="csr")
            rec.check("flip_involution", lambda: _max_entry(F @ F - eye), s.exact_tol)
            rec.check(
                "right_equals_flip_left",
                lambda: max(_max_entry(R - F @ L @ F) for L, R in zip(lefts, rights)),
                s.exact_tol,
            )

            def creation_isometry() -> float:
                size = fock_dim(n, N - 1)
                worst = 0.0
                for i, Li in enumerate(lefts):
                    for j, Lj in enumerate(lefts):
                        gram = (Li.conj().T @ Lj)[:size, :size]
                        if i == j:
                            gram = gram - sp.identity(size, format="csr")
                        worst = max(worst, _max_entry(gram))
                return worst

            rec.check("creation_isometry", creation_isometry, s.exact_tol)

            def compression_exact() -> float:
                # a resolvent times a creation, computed at two truncations
                D = self.dense_level
                z = sampler.ball_point(n, 0.5, 0.1)
                small = nilpotent_solve(
                    1.0,
                    pencil(z, creation_matrices("left", n, D, sparse=True)),
                    creation_matrices("left", n, D)[0],
                    D,
                )
                big = nilpotent_solve(
                    1.0,
                    pencil(z, creation_matrices("left", n, D + 2, sparse=True)),
                    creation_matrices("left", n, D + 2)[0],
                    D + 2,
                )
                size = fock_dim(n, D)
                return _max_entry(big[:size, :size] - small)

            rec.check("compression_exact", compression_exact, s.exact_tol, level=self.dense_level)

        lam = sampler.ball_point(n, 0.9, 0.1)
        radius = float(np.linalg.norm(lam))
        nu = _attempt(lambda: nu_lambda(lam, n, N))
        size = fock_dim(n, N - 1)

        rec.check(
            "nu_norm",
            lambda: abs(np.vdot(_unwrap(nu), nu).real - (1 - radius ** (2 * (N + 1)))),
            s.exact_tol,
            radius=radius,
        )

        def eigenrelation(operators: List[sp.csr_matrix]) -> float:
            vector = _unwrap(nu)
            return max(
                float(
                    np.linalg.norm((A.conj().T @ vector)[:size] - np.conj(lam[i]) * vector[:size])
                )
                for i, A in enumerate(operators)
            )

        rec.check("nu_eigen_left", lambda: eigenrelation(lefts), s.exact_tol, radius=radius)
        rec.check("nu_eigen_right", lambda: eigenrelation(rights), s.exact_tol, radius=radius)

        def moment_tail() -> Outcome:
            # columns L_w nu, level by level with the first letter major
            vector = _unwrap(nu)
            level = _exhaustive_level(n, N)
            block = vector.reshape(-1, 1)
            moments = [np.conj(vector) @ block]
            for _ in range(level):
                block = np.hstack([L @ block for L in lefts])
                moments.append(np.conj(vector) @ block)
            moments = np.concatenate(moments)
            powers = lambda_powers(lam, level)
            lengths = np.concatenate([np.full(n**k, k) for k in range(level + 1)])
            tails = np.abs(powers) * radius ** (2 * (N - lengths + 1))
            excess = np.abs(moments - powers) - tails
            return Outcome(max(float(excess.max()), 0.0), None, float(tails.max()))

        rec.check("nu_moment_tail", moment_tail, s.exact_tol, radius=radius)

    # ------------------------------------------------------------------ linop

    def _linop(self, rec: TrialRecorder, sampler: InstanceSampler) -> None:
        s = self.settings
        if rec.trial == 0:
            rec.check(
                "defect_example",
                lambda: abs(defect([[0.6]]).operator[0, 0] - 0.8)
                + defect(sampler.isometry(3, 2)).rank,
                s.exact_tol,
            )
            rec.check(
                "structured_example",
                lambda: op_norm(
                    build_structured_unitary([[0.6]], [[1.0]], [[1.0]]).matrix()
                    - np.array([[0.8, -0.6], [0.6, 0.8]])
                ),
                s.exact_tol,
            )

        p, q = (int(v) for v in sampler.rng.integers(1, 7, size=2))
        C = sampler.contraction(p, q)
        D = _attempt(lambda: defect(C))
        D_star = _attempt(lambda: defect(C.conj().T))
        gram = C.conj().T @ C
        dims = {"p": p, "q": q}

        rec.check(
            "defect_identity",
            lambda: op_norm(_unwrap(D).operator @ D.operator + gram - np.eye(q)),
            s.exact_tol,
            **dims,
        )
        rec.check(
            "defect_commutes",
            lambda: op_norm(_unwrap(D).operator @ gram - gram @ D.operator),
            s.exact_tol,
            **dims,
        )
        rec.check(
            "defect_intertwining",
            lambda: op_norm(C @ _unwrap(D).operator - _unwrap(D_star).operator @ C),
            s.law_tol,
            **dims,
        )

        Z = sampler.unitary(_unwrap(D).rank) if not isinstance(D, Exception) else None
        Z_star = (
            sampler.unitary(_unwrap(D_star).rank) if not isinstance(D_star, Exception) else None
        )
        J = _attempt(lambda: build_structured_unitary(C, Z_star, Z))
        factors = _attempt(lambda: factor_structured_unitary(_unwrap(J)))

        rec.check(
            "structured_unitarity",
            lambda: unitarity_residual(_unwrap(J).matrix()),
            s.exact_tol,
            **dims,
        )

        def factor_roundtrip() -> float:
            f = _unwrap(factors)
            rebuilt = build_structured_unitary(f.A, f.Z_star, f.Z)
            return op_norm(rebuilt.matrix() - _unwrap(J).matrix())

        rec.check("factor_roundtrip", factor_roundtrip, s.law_tol, **dims)
        rec.check(
            "factor_recovers_intertwiners",
            lambda: max(
                op_norm(_unwrap(factors).Z - Z), op_norm(_unwrap(factors).Z_star - Z_star)
            ),
            s.law_tol,
            **dims,
        )

        def polish() -> float:
            k = max(p, q)
            noisy = sampler.unitary(k) + 1e-6 * sampler.ginibre(k, k)
            return unitarity_residual(closest_unitary(noisy))

        rec.check("closest_unitary", polish, s.exact_tol)

    # -------------------------------------------------------------- redheffer

    def _redheffer(self, rec: TrialRecorder, sampler: InstanceSampler) -> None:
        s = self.settings
        if rec.trial == 0:
            L = BlockSystem2x2.from_matrix(np.array([[0.8, -0.6], [0.6, 0.8]]), 1, 1)
            L1 = BlockSystem2x2.from_matrix(np.array([[1.0, 0.5], [0.0, 0.0]]), 1, 1)
            rec.check(
                "scalar_example",
                lambda: abs(redheffer_product(L, L1).matrix()[0, 1] + 1 / 7),
                s.exact_tol,
            )
            rec.check("alpha_example", lambda: abs(alpha(L, [[0.5]])[0, 0] + 1 / 7), s.exact_tol)
            rec.check("alpha_zero", lambda: op_norm(alpha(L, [[0.0]]) - L.B), s.exact_tol)

            def wellposedness_rejected() -> float:
                singular = BlockSystem2x2.from_matrix(np.array([[0.0, 0.0], [1.0, 0.0]]), 1, 1)
                feedback = BlockSystem2x2.from_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]), 1, 1)
                try:
                    redheffer_product(singular, feedback)
                except WellPosednessError:
                    return 0.0
                return 1.0

            rec.check("wellposedness_rejected", wellposedness_rejected, 0.0)

        for instance in range(s.instances_per_trial):
            L, L1 = sampler.compatible_pair("contraction")
            x, u, y, z = L.dims
            x1, u1, y1, z1 = L1.dims
            x2, z2 = (int(v) for v in sampler.rng.integers(1, 5, size=2))
            L2 = sampler.block_system((x2, z1, x1, z2))

            def unit_law() -> float:
                right = redheffer_product(L, BlockSystem2x2.identity(x, z))
                left = redheffer_product(BlockSystem2x2.identity(y, u), L)
                return max(
                    op_norm(right.matrix() - L.matrix()), op_norm(left.matrix() - L.matrix())
                )

            def associativity() -> float:
                left = redheffer_product(redheffer_product(L, L1), L2)
                right = redheffer_product(L, redheffer_product(L1, L2))
                return op_norm(left.matrix() - right.matrix())

            rec.check("unit_law", unit_law, s.law_tol, instance=instance, dims=[x, u, y, z])
            rec.check("associativity", associativity, s.law_tol, instance=instance)

            square, _ = sampler.compatible_pair("unitary")

            def inverse_law() -> float:
                xs, us, ys, zs = square.dims
                inverse = BlockSystem2x2.from_matrix(square.matrix().conj().T, ys, xs)
                forward = redheffer_product(square, inverse).matrix()
                backward = redheffer_product(inverse, square).matrix()
                return max(
                    op_norm(forward - np.eye(ys + us)), op_norm(backward - np.eye(xs + zs))
                )

            rec.check("inverse_law", inverse_law, s.law_tol, instance=instance)

            for kind in SYSTEM_KINDS:
                pair = sampler.compatible_pair(kind)

                def preserved(kind: str = kind, pair: tuple = pair) -> float:
                    M = redheffer_product(*pair).matrix()
                    if kind == "contraction":
                        return max(op_norm(M) - 1.0, 0.0)
                    if kind == "unitary":
                        return unitarity_residual(M)
                    if kind == "isometry":
                        return isometry_residual(M)
                    return isometry_residual(M.conj().T)

                rec.check(f"class_{kind}", preserved, s.law_tol, instance=instance)

            B1 = sampler.contraction(square.dims[0], square.dims[3])
            rec.check(
                "alpha_contraction",
                lambda: max(op_norm(alpha(square, B1)) - 1.0, 0.0),
                s.law_tol,
                instance=instance,
            )

    # --------------------------------------------------------------- autgroup

    def _autgroup(self, rec: TrialRecorder, sampler: InstanceSampler) -> None:
        s = self.settings
        n, N, B = self.config.n, self.config.level, self.config.margin
        D = self.dense_level

        if rec.trial == 0:
            rec.check(
                "identity_implementation",
                lambda: _max_entry(
                    implementing_unitary(make_junitary("identity", n), n, D)
                    - np.eye(fock_dim(n, D))
                ),
                s.exact_tol,
                level=D,
            )

            def mobius_vacuum() -> float:
                X = make_junitary("mobius", 1, mu=[-0.6])
                column = vacuum_column(X, 1, N)
                return _max_entry(column - 0.8 * 0.6 ** np.arange(N + 1))

            rec.check("mobius_vacuum_example", mobius_vacuum, s.exact_tol)

        X = sampler.junitary(n)
        X2 = sampler.junitary(n)
        lam = sampler.ball_point(n, 0.9)
        q = ball_offset(X)
        Y = _attempt(lambda: unitary_form(X))
        extra = {"q": q}

        rec.check("junitary_form", lambda: X.residual(), s.exact_tol, **extra)
        rec.check("unitary_form_unitary", lambda: unitarity_residual(_unwrap(Y).Y), s.law_tol)
        rec.check(
            "form_roundtrip", lambda: op_norm(junitary_form(_unwrap(Y)).X - X.X), s.law_tol
        )

        def phi_matches_alpha() -> float:
            system = system_on_coefficients(_unwrap(Y), 1)
            return float(np.linalg.norm(alpha(system, lam.reshape(1, n)).ravel() - phi(X, lam)))

        rec.check("phi_matches_alpha", phi_matches_alpha, s.law_tol)
        rec.check(
            "phi_group_law",
            lambda: float(np.linalg.norm(phi(X2, phi(X, lam)) - phi(X @ X2, lam))),
            s.law_tol,
        )
        rec.check(
            "phi_inverse",
            lambda: float(np.linalg.norm(phi(X.inverse(), phi(X, lam)) - lam)),
            s.law_tol,
        )

        def phi_kernel() -> float:
            theta = float(sampler.rng.uniform(-np.pi, np.pi))
            scalar = make_junitary(
                "rotation", n, theta=theta, W=np.exp(1j * theta) * np.eye(n)
            )
            return float(np.linalg.norm(phi(scalar, lam) - lam))

        rec.check("phi_kernel", phi_kernel, s.law_tol)

        images = _attempt(lambda: generator_images(X, n, D))

        def alpha_images() -> float:
            expected = alpha_generator_images(_unwrap(Y), n, D)
            return max(op_norm(a - b) for a, b in zip(_unwrap(images), expected))

        def inverse_images() -> float:
            inverse = generator_images(X.inverse(), n, D)
            expected = alpha_generator_images(_unwrap(Y).adjoint(), n, D)
            return max(op_norm(a - b) for a, b in zip(inverse, expected))

        rec.check("alpha_images_exact", alpha_images, s.law_tol, level=D)
        rec.check("inverse_images", inverse_images, s.law_tol, level=D)
        rec.check(
            "generator_row_contraction",
            lambda: max(op_norm(np.hstack(_unwrap(images))) - 1.0, 0.0),
            s.law_tol,
            level=D,
        )

        U = _attempt(lambda: implementing_unitary(X, n, D))

        def flip_commutes() -> float:
            F = flip_matrix(n, D)
            return _max_entry(_unwrap(U) @ F - F @ U)

        rec.check("flip_commutes", flip_commutes, s.exact_tol, level=D)
        rec.check(
            "column_norms",
            lambda: max(-float(column_norm_deficits(_unwrap(U)).min()), 0.0),
            s.exact_tol,
            level=D,
        )

        def vacuum_deficit() -> Outcome:
            rate = float(np.linalg.norm(X.z)) / abs(X.x)
            predicted = rate ** (2 * (D + 1))
            return Outcome(abs(column_norm_deficits(_unwrap(U))[0] - predicted), None, predicted)

        rec.check("vacuum_deficit", vacuum_deficit, s.exact_tol, level=D)
        rec.check(
            "vacuum_column_identity",
            lambda: float(
                np.linalg.norm(
                    vacuum_column(X, n, N) - nu_lambda(phi(X.inverse(), np.zeros(n)), n, N)
                )
            ),
            s.exact_tol,
        )
        rec.check(
            "vacuum_row_identity",
            lambda: float(
                np.linalg.norm(
                    np.conj(implementing_unitary(X, n, N, rows_level=0)[0])
                    - nu_lambda(phi(X, np.zeros(n)), n, N)
                )
            ),
            s.exact_tol,
        )

        for side in ("left", "right"):

            def implementation(side: str = side) -> Outcome:
                residual, predicted = implementation_residuals(X, N, B, side=side)
                return Outcome(residual, None, predicted)

            rec.check(f"implementation_{side}", implementation, s.theorem_tol, **extra)

        if not isinstance(U, Exception):
            self._dump(rec, "U_X", U, n, D)

    # ----------------------------------------------------------------- rowcon

    def _rowcon(self, rec: TrialRecorder, sampler: InstanceSampler) -> None:
        s = self.settings
        n, m, r = self.config.n, self.config.m, self.config.r
        N, B = self.config.level, self.config.margin
        D = self.dense_level

        if rec.trial == 0:
            self._classical_checks(rec)

            def zero_row() -> float:
                T0 = RowContraction.from_matrices([np.zeros((m, m))] * n)
                # T = 0 has K = e_empty (x) I
                K = poisson_kernel(T0, 1.0, D)
                expected = np.zeros_like(K)
                expected[:m, :] = np.eye(m)
                return _max_entry(K - expected)

            rec.check("zero_row_kernel", zero_row, s.exact_tol, level=D)

            def cnc_examples() -> float:
                coisometric = [
                    is_cnc(RowContraction.from_matrices([[[1.0]]]), depth=4),
                    is_cnc(RowContraction.from_matrices([[[1.0]], [[0.0]]]), depth=4),
                ]
                strict = is_cnc(RowContraction.from_matrices([[[0.5]]]), depth=4)
                return sum(v.cnc for v in coisometric) + (not strict.cnc)

            rec.check("cnc_examples", cnc_examples, 0.0)

        T = sampler.row_contraction(n, m)
        rho = T.row_norm
        extra = {"rho": rho}

        rec.check(
            "kernel_methods",
            lambda: op_norm(poisson_kernel(T, r, N) - poisson_kernel(T, r, N, method="resolvent")),
            s.law_tol,
            **extra,
        )
        rec.check(
            "char_methods",
            lambda: op_norm(
                char_function(T, r, D).dense() - char_function(T, r, D, method="resolvent").dense()
            ),
            s.law_tol,
            level=D,
        )

        realization = _attempt(lambda: redheffer_realization(T, r, D))
        rec.check(
            "realization_kernel",
            lambda: op_norm(_unwrap(realization).kernel - poisson_kernel(T, r, D)),
            s.law_tol,
            level=D,
        )
        rec.check(
            "realization_theta",
            lambda: op_norm(_unwrap(realization).theta - char_function(T, r, D).dense()),
            s.law_tol,
            level=D,
        )

        theta = _attempt(lambda: char_function(T, 1.0, N))
        rec.check(
            "level_structure", lambda: level_structure_residual(_unwrap(theta)), s.exact_tol
        )
        rec.check(
            "multianalytic",
            lambda: is_multianalytic(char_function(T, 1.0, D)),
            s.exact_tol,
            level=D,
        )
        rec.check(
            "char_contraction",
            lambda: max(op_norm(char_function(T, 1.0, D).dense()) - 1.0, 0.0),
            s.law_tol,
            level=D,
        )

        identity = _attempt(lambda: defect_identity_residual(T, N, B))
        grown = _attempt(lambda: defect_identity_residual(T, N + 1, B))

        def defect_identity() -> Outcome:
            residual, predicted = _unwrap(identity)
            return Outcome(residual, None, predicted)

        rec.check("defect_identity", defect_identity, s.theorem_tol, **extra)
        rec.check(
            "defect_identity_decay",
            lambda: self._decay(_unwrap(identity)[0], _unwrap(grown)[0], rho**2),
            level_pair=[N, N + 1],
            **extra,
        )

        def kernel_isometry() -> Outcome:
            residual, predicted = kernel_isometry_residual(T, N)
            return Outcome(residual, predicted + s.roundoff_floor, predicted)

        rec.check("kernel_isometry", kernel_isometry, **extra)

        def r_limits() -> Outcome:
            K1 = poisson_kernel(T, 1.0, D)
            theta1 = char_function(T, 1.0, D).dense()
            gaps = [
                max(
                    op_norm(poisson_kernel(T, radius, D) - K1),
                    op_norm(char_function(T, radius, D).dense() - theta1),
                )
                for radius in R_LIMIT_RADII
            ]
            increase = max(b - a for a, b in zip(gaps, gaps[1:]))
            return Outcome(max(increase, 0.0), None, gaps[-1])

        rec.check("r_limits", r_limits, s.exact_tol, level=D, radii=list(R_LIMIT_RADII))

        def single_word() -> float:
            w = word(*(int(v) for v in sampler.rng.integers(1, n + 1, size=3)), n=n)
            product = np.eye(m, dtype=complex)
            for letter in w.letters:
                product = product @ T.matrices[letter - 1]
            return op_norm(functional_calculus({w: 1.0}, T) - product)

        rec.check("functional_calculus_word", single_word, s.law_tol)

        if rec.trial == 0 and not isinstance(theta, Exception):
            d_star = T.defect_dims[1]
            self._dump(rec, "Theta_T", theta.sparse(), n, N, coeff_dim=d_star)
            self._dump(rec, "K_T", poisson_kernel(T, 1.0, N), n, N, coeff_dim=d_star)

    def _classical_checks(self, rec: TrialRecorder) -> None:
        """n = 1, T = 0.6: Theta is the Blaschke factor and K_T e_k = 0.8 * 0.6^k."""
        s = self.settings
        level = 16
        t = 0.6
        T = RowContraction.from_matrices([[[t]]])
        k = np.arange(level + 1)
        taylor = np.where(k == 0, -t, (1 - t**2) * t ** np.maximum(k - 1, 0))

        rec.check(
            "classical_theta",
            lambda: _max_entry(char_function(T, 1.0, level).vacuum_column()[:, 0] - taylor),
            s.exact_tol,
            level=level,
        )
        rec.check(
            "classical_kernel",
            lambda: _max_entry(poisson_kernel(T, 1.0, level)[:, 0] - 0.8 * t**k),
            s.exact_tol,
            level=level,
        )

        def shift_column() -> float:
            T0 = RowContraction.from_matrices([[[0.0]]])
            expected = np.zeros(level + 1)
            expected[1] = 1.0
            return _max_entry(char_function(T0, 1.0, level).vacuum_column()[:, 0] - expected)

        rec.check("classical_shift", shift_column, s.exact_tol, level=level)

    # -------------------------------------------------------------- transform

    def _transform(self, rec: TrialRecorder, sampler: InstanceSampler) -> None:
        s = self.settings
        n, m, r = self.config.n, self.config.m, self.config.r
        N, B = self.config.level, self.config.margin
        D, B_dense = self.dense_level, self.dense_margin

        X = sampler.junitary(n)
        X2 = sampler.junitary(n)
        T = sampler.row_contraction(n, m)
        q, rho = ball_offset(X), T.row_norm
        extra = {"q": q, "rho": rho}

        if rec.trial == 0:
            rec.check(
                "identity_action",
                lambda: op_norm(
                    apply_automorphism(make_junitary("identity", n), T).row - T.row
                ),
                s.exact_tol,
            )
            self._mobius_scalar(rec)

        def diagonal_oracle() -> float:
            points = [sampler.ball_point(n, 0.9) for _ in range(m)]
            diagonal = RowContraction.from_matrices(
                [np.diag([p[i] for p in points]) for i in range(n)]
            )
            moved = apply_automorphism(X, diagonal)
            images = np.array([phi(X, p) for p in points])
            return max(
                op_norm(moved.matrices[i] - np.diag(images[:, i])) for i in range(n)
            )

        rec.check("diagonal_oracle", diagonal_oracle, s.law_tol)
        rec.check(
            "group_compatibility",
            lambda: op_norm(
                apply_automorphism(X2, apply_automorphism(X, T)).row
                - apply_automorphism(X @ X2, T).row
            ),
            s.law_tol,
        )
        rec.check(
            "inverse_compatibility",
            lambda: max(
                op_norm(apply_inverse_automorphism(X, apply_automorphism(X, T)).row - T.row),
                op_norm(
                    apply_inverse_automorphism(X, T).row - apply_automorphism(X.inverse(), T).row
                ),
            ),
            s.law_tol,
        )

        moved = _attempt(lambda: apply_inverse_automorphism(X, T))
        rec.check(
            "contractivity",
            lambda: max(_unwrap(moved).row_norm - 1.0, 0.0),
            s.law_tol,
            **extra,
        )
        rec.check("strict_preserved", lambda: float(not _unwrap(moved).strict), 0.0, **extra)

        def intertwiners() -> float:
            pair = defect_intertwiners(X, T)
            return max(pair.residual_Z, pair.residual_Z_star)

        rec.check("intertwiner_unitarity", intertwiners, s.intertwiner_tol, **extra)

        base = _attempt(lambda: theorem51_residuals(X, T, N, B))
        grown = _attempt(lambda: theorem51_residuals(X, T, N + 2, B + 2))
        self._transport_records(rec, base, grown, extra)

        Xh = sampler.hyperbolic_junitary(n)
        Bh = _attempt(lambda: transport_margin(Xh, n, N, B))
        hyperbolic = {"q": ball_offset(Xh), "rho": rho}
        if isinstance(Bh, int):
            hyperbolic["margin"] = Bh
        base_h = _attempt(lambda: theorem51_residuals(Xh, T, N, _unwrap(Bh)))
        grown_h = _attempt(lambda: theorem51_residuals(Xh, T, N + 2, _unwrap(Bh) + 2))
        self._transport_records(rec, base_h, grown_h, hyperbolic, prefix="hyperbolic_transport")

        rec.check(
            "associativity",
            lambda: associativity_residual(X, T, r, D),
            s.law_tol,
            level=D,
        )
        first_row = _attempt(lambda: first_row_residuals(X, n, m, D, B_dense))
        rec.check(
            "first_row_vacuum", lambda: _unwrap(first_row)[0], s.law_tol, level=D, margin=B_dense
        )
        rec.check(
            "first_row_shift", lambda: _unwrap(first_row)[1], s.theorem_tol, level=D, margin=B_dense
        )
        rec.check(
            "shifted_realization",
            lambda: max(shifted_realization_residuals(X, T, D, B_dense)),
            s.theorem_tol,
            level=D,
            margin=B_dense,
        )

    def _transport_records(
        self,
        rec: TrialRecorder,
        base: Any,
        grown: Any,
        extra: Dict[str, Any],
        prefix: str = "transport",
    ) -> None:
        """
        Transport residuals at (N, B), and against (N + 2, B + 2) with the same top block.

        Each residual is bounded by the coupling ||P_top U_X P_{>N}|| of its
        truncation, which can only shrink as N grows.
        """
        s = self.settings
        for part in ("theta", "k"):
            attribute = f"res_{part}"
            label = "kernel" if part == "k" else "theta"

            def at_level(attribute: str = attribute) -> Outcome:
                result = _unwrap(base)
                return Outcome(getattr(result, attribute), None, result.predicted_scale)

            def decay(attribute: str = attribute) -> Outcome:
                old, new = _unwrap(base), _unwrap(grown)
                bound = min(old.predicted_scale, new.predicted_scale)
                return Outcome(
                    getattr(new, attribute), bound + s.roundoff_floor, new.predicted_scale
                )

            rec.check(f"{prefix}_{label}", at_level, s.theorem_tol, **extra)
            rec.check(f"{prefix}_decay_{label}", decay, **extra)

    def _mobius_scalar(self, rec: TrialRecorder) -> None:
        """T = 0.6 against the Mobius map with phi_X(0) = -0.6, growing N at a fixed top block."""
        s = self.settings
        N, B = self.config.level, self.config.margin
        t = 0.6
        T = RowContraction.from_matrices([[[t]]])
        X = make_junitary("mobius", 1, mu=[-t])
        demo = _attempt(lambda: demo_mobius(t, N, B, tol=s.theorem_tol))
        level = N if isinstance(demo, Exception) else demo.residuals[-1].level

        def residuals() -> Outcome:
            last = _unwrap(demo).residuals[-1]
            return Outcome(max(last.res_theta, last.res_k), None, last.predicted_scale)

        def unimodular() -> float:
            pair = defect_intertwiners(X, T)
            return max(abs(abs(pair.Z[0, 0]) - 1), abs(abs(pair.Z_star[0, 0]) - 1))

        rec.check("mobius_scalar", residuals, s.theorem_tol, t=t, mu=-t, level=level)
        rec.check(
            "mobius_scalar_converged",
            lambda: float(not _unwrap(demo).passed),
            0.0,
            t=t,
            mu=-t,
            level=level,
        )
        rec.check("mobius_intertwiners", unimodular, s.law_tol, t=t, mu=-t)

    # ------------------------------------------------------------ constrained

    def _constrained(self, rec: TrialRecorder, sampler: InstanceSampler) -> None:
        s = self.settings
        n, m, N, B = self.config.n, self.config.m, self.config.level, self.config.margin

        S = _attempt(lambda: symmetrizer(n, N))
        if rec.trial == 0:
            self._ideal_checks(rec, sampler, S)

        X = sampler.junitary(n)
        T = sampler.commuting_row(n, m)
        q, rho = ball_offset(X), T.row_norm
        extra = {"q": q, "rho": rho}

        def nu_in_symmetric() -> float:
            nu = nu_lambda(sampler.ball_point(n, 0.9), n, N)
            Q = _unwrap(S).basis
            return float(np.linalg.norm(nu - Q @ (Q.conj().T @ nu)))

        rec.check("nu_in_symmetric", nu_in_symmetric, s.exact_tol)
        rec.check(
            "constraint_satisfied", lambda: constraint_norm(T, _unwrap(S)), s.law_tol, **extra
        )
        rec.check(
            "constraint_transport",
            lambda: transported_constraint_norm(X, T, _unwrap(S)),
            s.law_tol,
            **extra,
        )

        def kernel_isometry() -> Outcome:
            K = constrained_poisson(T, _unwrap(S), 1.0, N)
            predicted = rho ** (2 * (N + 1))
            residual = op_norm(K.conj().T @ K - np.eye(m))
            return Outcome(residual, predicted + s.roundoff_floor, predicted)

        rec.check("constrained_kernel_isometry", kernel_isometry, **extra)

        def symmetric_invariance() -> Outcome:
            leak, predicted = invariance_residual(_unwrap(S), X, N, B)
            return Outcome(leak, None, predicted)

        rec.check("symmetric_invariance", symmetric_invariance, s.theorem_tol, **extra)

        def transported_polynomial() -> Outcome:
            f = {word(n=n): 0.5 + 0j}
            for _ in range(3):
                length = int(sampler.rng.integers(1, 3))
                letters = (int(v) for v in sampler.rng.integers(1, n + 1, size=length))
                w = word(*letters, n=n)
                f[w] = f.get(w, 0j) + complex(*sampler.rng.standard_normal(2))
            if n >= 2:
                f.update(commutator_polynomial(1, 2, n))
            residual, predicted = transported_polynomial_residual(X, T, f, N)
            return Outcome(residual, None, predicted)

        rec.check("transported_polynomial", transported_polynomial, s.theorem_tol, **extra)

        base = _attempt(lambda: theorem62_residuals(X, T, _unwrap(S), N, B))
        grown = _attempt(lambda: theorem62_residuals(X, T, symmetrizer(n, N + 2), N + 2, B + 2))
        self._transport_records(rec, base, grown, extra)

        Xh = sampler.hyperbolic_junitary(n)
        Bh = _attempt(lambda: transport_margin(Xh, n, N, B))
        hyperbolic = {"q": ball_offset(Xh), "rho": rho}
        if isinstance(Bh, int):
            hyperbolic["margin"] = Bh
        base_h = _attempt(lambda: theorem62_residuals(Xh, T, _unwrap(S), N, _unwrap(Bh)))
        grown_h = _attempt(
            lambda: theorem62_residuals(Xh, T, symmetrizer(n, N + 2), N + 2, _unwrap(Bh) + 2)
        )
        self._transport_records(rec, base_h, grown_h, hyperbolic, prefix="hyperbolic_transport")

        if rec.trial == 0 and not isinstance(S, Exception):
            self._dump(rec, "symmetrizer", S.basis, n, N)

    def _ideal_checks(self, rec: TrialRecorder, sampler: InstanceSampler, S: Any) -> None:
        s = self.settings
        n, N = self.config.n, self.config.level

        def symmetrizer_rank() -> float:
            expected = sum(math.comb(k + n - 1, n - 1) for k in range(N + 1))
            return abs(_unwrap(S).rank - expected)

        rec.check("symmetrizer_rank", symmetrizer_rank, 0.0)
        rec.check(
            "adjoint_invariance",
            lambda: max(_unwrap(S).invariance_residuals().values()),
            s.exact_tol,
        )

        def constrained_creations_commute() -> float:
            Q = _unwrap(S)
            columns = Q.top_count(N - 2)
            creations = [constrained_creation(Q, "left", i) for i in range(1, n + 1)]
            worst = 0.0
            for i in range(n):
                for j in range(i + 1, n):
                    commutator = creations[i] @ creations[j] - creations[j] @ creations[i]
                    worst = max(worst, op_norm(commutator[:, :columns]))
            return worst

        rec.check("constrained_creations_commute", constrained_creations_commute, s.exact_tol)

        def nu_span() -> float:
            reference = symmetrizer(n, 3)
            rank, basis = nu_span_rank(n, 3, reference.rank + 5, sampler.rng)
            if rank != reference.rank:
                return 1.0
            return subspace_distance(basis, reference.basis)

        rec.check("nu_span_rank", nu_span, s.law_tol, level=3)

        if n < 2:
            return
        for level in (3, 4):
            rec.check(
                "ideal_matches_symmetrizer",
                lambda level=level: subspace_distance(
                    ideal_subspace(commutator_generators(n), n, level).basis,
                    symmetrizer(n, level).basis,
                ),
                s.exact_tol,
                level=level,
            )

        def single_letter_ideal() -> float:
            # N_J for J = <L_1> is spanned by the words avoiding letter 1
            level = 3
            generated = ideal_subspace([{word(1, n=n): 1.0 + 0j}], n, level)
            keep = [
                i
                for i in range(fock_dim(n, level))
                if 1 not in word_at(i, n, level).letters
            ]
            expected = explicit_subspace(np.eye(fock_dim(n, level))[:, keep], n, level)
            return subspace_distance(generated.basis, expected.basis)

        rec.check("single_letter_ideal", single_letter_ideal, s.exact_tol, level=3)


def run_suite(
    config: RunConfig, settings: Optional[WorkbenchSettings] = None
) -> List[CheckRecord]:
    """Run the configured suites; records are in (suite, trial) order."""
    return VerificationSuite(config, settings).run()


def demo_mobius(
    t: float = 0.6,
    N: int = 12,
    margin: int = 3,
    mu: Optional[float] = None,
    tol: Optional[float] = None,
    max_level: Optional[int] = None,
) -> MobiusDemo:
    """
    The n = 1 reduction: Theta_T for T = t against the Taylor coefficients of
    (z - t)/(1 - t z), and transport residuals for a scalar Mobius map.

    The Mobius map defaults to phi_X(0) = -t, X = (1 - t^2)^{-1/2} [[1, t], [t, 1]].
    Residual rows keep the compared block at levels <= N - margin and grow
    the truncation from N in steps of margin until both residuals are below
    tol (the theorem tolerance by default) or max_level (N + 120) is passed.

    Raises:
        ValidationError: If t is outside (0, 1), mu outside (-1, 1), N < margin + 2
            or max_level < N
    """
    mu = -t if mu is None else mu
    if not 0 < t < 1 or not -1 < mu < 1:
        raise ValidationError("Need 0 < t < 1 and -1 < mu < 1", field="t", value=(t, mu))
    if N < margin + 2:
        raise ValidationError(f"Need N >= margin + 2 (N={N})", field="N", value=N)
    tol = get_settings().theorem_tol if tol is None else tol
    max_level = N + _DEMO_EXTRA_LEVELS if max_level is None else max_level
    if max_level < N:
        raise ValidationError(
            f"max_level {max_level} is below N={N}", field="max_level", value=max_level
        )

    T = RowContraction.from_matrices([[[t]]])
    theta = char_function(T, 1.0, N).vacuum_column()[:, 0]
    kernel = poisson_kernel(T, 1.0, N)[:, 0]
    rows = []
    for k in range(N + 1):
        taylor = -t if k == 0 else (1 - t**2) * t ** (k - 1)
        poisson = np.sqrt(1 - t**2) * t**k
        deviation = max(abs(theta[k] - taylor), abs(kernel[k] - poisson))
        rows.append(
            CoefficientRow(
                k=k,
                theta=float(theta[k].real),
                taylor=taylor,
                poisson=float(poisson),
                deviation=float(deviation),
            )
        )

    X = make_junitary("mobius", 1, mu=[mu])
    top = N - margin
    residuals = []
    for level in range(N, max_level + 1, max(margin, 1)):
        result = theorem51_residuals(X, T, level, level - top)
        residuals.append(
            ResidualRow(
                level=level,
                res_theta=result.res_theta,
                res_k=result.res_k,
                predicted_scale=result.predicted_scale,
            )
        )
        if max(result.res_theta, result.res_k) <= tol:
            break
    demo = MobiusDemo(
        t=t,
        level=N,
        margin=margin,
        coefficients=rows,
        residuals=residuals,
        mu=mu,
        tolerance=tol,
    )
    worst = max(row.deviation for row in rows)
    logger.info(
        f"Mobius demo t={t}, mu={mu}, N={N}: max coefficient deviation {worst:.3e}, "
        f"residuals below {tol:.1e} from level {residuals[-1].level}: {demo.converged}"
    )
    return demo
