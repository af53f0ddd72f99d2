"""Batch front-end: JSON run configs in, machine-readable result documents out.

Three subcommands cover the package surface: `evolve` runs a configured
Trotter evolution and measures observables, `antisym` dumps the amplitude map
of one antisymmetrization next to its oracle fidelity, `validate` replays a
named self-check suite as a pass/fail table.

Exit codes are uniform: 0 success, 1 an internal invariant tripped (or a
validation suite failed), 2 anything wrong with the user's input.  Result
documents echo their fully normalized config, so a document alone is enough to
reproduce the run; reruns are byte-identical except for the wall-time field.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

from fermisim import __version__
from fermisim.antisym import (
    QuWordLayout,
    RegisterBank,
    antisymmetrize,
    collapse_ancillas,
    prepare_ordered_input,
)
from fermisim.fq import FirstQuantizedLayout, op_count_fq, prepare_antisymmetric, trotter_evolve_fq
from fermisim.observables import (
    SamplingPlan,
    charge_density,
    expected_energy,
    k_point_correlation,
    momentum_distribution,
)
from fermisim.oracle import slater_antisymmetrize
from fermisim.sq import (
    DOWN,
    UP,
    HubbardParams,
    LatticeSpec,
    ModeLayout,
    TrotterPlan,
    encode_occupation,
    op_count,
    trotter_evolve,
)
from fermisim.state import InvariantViolation, init_basis_state, set_validation_mode
from fermisim.validate import SUITES, run_suite

THREAD_ENV_VAR = "FERMISIM_THREADS"
OBSERVABLE_KINDS = ("charge_density", "pair_correlation", "k_point_correlation",
                    "momentum_distribution", "energy")


class ConfigError(ValueError):
    """Schema violation, annotated with the offending config path."""


@dataclass(frozen=True)
class Sampling:
    n_trials: int
    seed: int
    epsilon: float = 0.1

    def to_dict(self) -> dict:
        return {"N": self.n_trials, "seed": self.seed, "epsilon": self.epsilon}


@dataclass(frozen=True)
class RunConfig:
    """One fully validated evolution run."""

    formalism: str
    m: int
    boundary: str
    v0: float
    t0: float
    particles: tuple
    plan_t: float
    plan_r: int
    observables: tuple
    sampling: Sampling | None
    backend: str
    mode: str

    def to_dict(self) -> dict:
        return {
            "formalism": self.formalism,
            "lattice": {"m": self.m, "boundary": self.boundary},
            "params": {"V0": self.v0, "t0": self.t0},
            "particles": [list(p) if isinstance(p, tuple) else p for p in self.particles],
            "plan": {"t": self.plan_t, "r": self.plan_r},
            "observables": [dict(entry) for entry in self.observables],
            "sampling": self.sampling.to_dict() if self.sampling else None,
            "backend": self.backend,
            "mode": self.mode,
        }


# ------------------------------------------------------------- config schema


def _require(mapping, key, path):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in mapping:
        raise ConfigError(f"{path}.{key}: missing required field")
    return mapping[key]


def _as_int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _as_number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite, got {value!r}")
    return float(value)


def _as_choice(value, choices, path):
    if value not in choices:
        raise ConfigError(f"{path}: expected one of {sorted(choices)}, got {value!r}")
    return value


def _parse_particles(raw, formalism, m, path):
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}: expected a non-empty list")
    if formalism == "second":
        seen = set()
        out = []
        for i, entry in enumerate(raw):
            spot = f"{path}[{i}]"
            if not isinstance(entry, list) or len(entry) != 2:
                raise ConfigError(f"{spot}: expected a [site, spin] pair")
            site = _as_int(entry[0], f"{spot}[0]")
            if not 1 <= site <= m:
                raise ConfigError(f"{spot}[0]: site must lie in 1..{m}, got {site}")
            spin = _as_choice(entry[1], ("up", "down"), f"{spot}[1]")
            if (site, spin) in seen:
                raise ConfigError(f"{spot}: mode ({site}, {spin}) listed twice")
            seen.add((site, spin))
            out.append((site, spin))
        return tuple(out)
    labels = [_as_int(v, f"{path}[{i}]") for i, v in enumerate(raw)]
    if len(labels) > 2 * m:
        raise ConfigError(f"{path}: {len(labels)} particles exceed the 2m = {2 * m} modes")
    for i, v in enumerate(labels):
        if not 1 <= v <= 2 * m:
            raise ConfigError(f"{path}[{i}]: label must lie in 1..{2 * m}, got {v}")
    if any(a >= b for a, b in zip(labels, labels[1:])):
        raise ConfigError(f"{path}: labels must be strictly increasing, got {labels}")
    return tuple(labels)


def _parse_observables(raw, formalism, m, n_particles, path):
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ConfigError(f"{path}: expected a list")
    out = []
    for i, item in enumerate(raw):
        spot = f"{path}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{spot}: expected an object")
        kind = _as_choice(_require(item, "kind", spot), OBSERVABLE_KINDS, f"{spot}.kind")
        entry = {"kind": kind}
        if kind in ("pair_correlation", "k_point_correlation"):
            sites = _require(item, "sites", spot)
            if not isinstance(sites, list):
                raise ConfigError(f"{spot}.sites: expected a list of sites")
            sites = [_as_int(s, f"{spot}.sites[{j}]") for j, s in enumerate(sites)]
            want = (2, 2) if kind == "pair_correlation" else (1, 3)
            if not want[0] <= len(sites) <= want[1]:
                raise ConfigError(f"{spot}.sites: expected {want[0]}..{want[1]} sites")
            if len(set(sites)) != len(sites):
                raise ConfigError(f"{spot}.sites: sites must be distinct")
            for j, s in enumerate(sites):
                if not 1 <= s <= m:
                    raise ConfigError(f"{spot}.sites[{j}]: site must lie in 1..{m}")
            entry["sites"] = sites
        elif kind == "momentum_distribution":
            if formalism != "first":
                raise ConfigError(
                    f"{spot}: momentum_distribution needs the first-quantized formalism"
                )
            particle = _as_int(_require(item, "particle", spot), f"{spot}.particle")
            if not 0 <= particle < n_particles:
                raise ConfigError(
                    f"{spot}.particle: must lie in 0..{n_particles - 1}, got {particle}"
                )
            entry["particle"] = particle
        extras = set(item) - set(entry)
        if extras:
            raise ConfigError(f"{spot}: unknown fields {sorted(extras)}")
        out.append(entry)
    return tuple(out)


def parse_config(raw) -> RunConfig:
    """Validate a decoded JSON object into a RunConfig; raise ConfigError on any hole."""
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object at the top level")
    known = {"formalism", "lattice", "params", "particles", "plan", "observables",
             "sampling", "backend", "mode"}
    extras = set(raw) - known
    if extras:
        raise ConfigError(f"config: unknown fields {sorted(extras)}")

    formalism = _as_choice(_require(raw, "formalism", "config"), ("first", "second"), "formalism")
    lattice = _require(raw, "lattice", "config")
    m = _as_int(_require(lattice, "m", "lattice"), "lattice.m", minimum=1)
    boundary = _as_choice(lattice.get("boundary", "open"), ("open",), "lattice.boundary")
    if formalism == "first" and (m < 2 or m & (m - 1)):
        raise ConfigError(f"lattice.m: first-quantized runs need a power of two >= 2, got {m}")

    params = _require(raw, "params", "config")
    v0 = _as_number(_require(params, "V0", "params"), "params.V0")
    t0 = _as_number(_require(params, "t0", "params"), "params.t0")

    plan = _require(raw, "plan", "config")
    plan_t = _as_number(_require(plan, "t", "plan"), "plan.t")
    plan_r = _as_int(_require(plan, "r", "plan"), "plan.r", minimum=1)

    backend = _as_choice(raw.get("backend", "dense"), ("dense", "sparse"), "backend")
    mode = _as_choice(raw.get("mode", "fermi"), ("fermi", "bose"), "mode")
    if mode == "bose" and formalism == "second":
        raise ConfigError("mode: the occupation-number encoding is fermionic; "
                          "bose runs need formalism = first")

    particles = _parse_particles(_require(raw, "particles", "config"), formalism, m, "particles")
    observables = _parse_observables(
        raw.get("observables"), formalism, m, len(particles), "observables"
    )

    sampling = None
    if raw.get("sampling") is not None:
        block = raw["sampling"]
        n_trials = _as_int(_require(block, "N", "sampling"), "sampling.N", minimum=1)
        seed = _as_int(_require(block, "seed", "sampling"), "sampling.seed", minimum=0)
        epsilon = _as_number(block.get("epsilon", 0.1), "sampling.epsilon")
        if epsilon <= 0:
            raise ConfigError(f"sampling.epsilon: must be positive, got {epsilon}")
        extras = set(block) - {"N", "seed", "epsilon"}
        if extras:
            raise ConfigError(f"sampling: unknown fields {sorted(extras)}")
        sampling = Sampling(n_trials=n_trials, seed=seed, epsilon=epsilon)

    return RunConfig(
        formalism=formalism, m=m, boundary=boundary, v0=v0, t0=t0,
        particles=particles, plan_t=plan_t, plan_r=plan_r,
        observables=observables, sampling=sampling, backend=backend, mode=mode,
    )


# ----------------------------------------------------------------- execution


def _evaluate(entry, state, layout, params, lattice, plan):
    kind = entry["kind"]
    if kind == "charge_density":
        exact = charge_density(state, layout)
        if plan is None:
            values = [
                {"index": s + 1, "exact": float(x), "sampled": None, "stderr": None}
                for s, x in enumerate(exact)
            ]
        else:
            values = [
                {"index": s + 1, "exact": e.exact, "sampled": e.sampled, "stderr": e.stderr}
                for s, e in enumerate(charge_density(state, layout, plan))
            ]
        return {"kind": kind, "values": values}
    if kind in ("pair_correlation", "k_point_correlation"):
        sites = tuple(entry["sites"])
        if plan is None:
            exact = k_point_correlation(state, layout, sites)
            return {"kind": kind, "sites": list(sites), "exact": float(exact),
                    "sampled": None, "stderr": None}
        est = k_point_correlation(state, layout, sites, plan)
        return {"kind": kind, "sites": list(sites), "exact": est.exact,
                "sampled": est.sampled, "stderr": est.stderr}
    if kind == "momentum_distribution":
        particle = entry["particle"]
        exact = momentum_distribution(state, layout, particle)
        sampled = momentum_distribution(state, layout, particle, plan) if plan else None
        values = []
        for k in sorted(exact.frequencies):
            row = {"index": k, "exact": exact.frequencies[k], "sampled": None, "stderr": None}
            if sampled is not None:
                f = sampled.frequencies[k]
                row["sampled"] = f
                row["stderr"] = math.sqrt(max(f * (1.0 - f), 0.0) / sampled.n_trials)
            values.append(row)
        return {"kind": kind, "particle": particle, "values": values}
    if kind == "energy":
        report = expected_energy(state, layout, params, lattice)
        return {"kind": kind, "potential": report.potential, "kinetic": report.kinetic,
                "total": report.total}
    raise ConfigError(f"observables: unknown kind {kind!r}")


def execute_run(config: RunConfig) -> dict:
    """Prepare, evolve, measure; return the result document as a plain dict."""
    started = time.perf_counter()
    lattice = LatticeSpec.chain(config.m)
    params = HubbardParams(config.v0, config.t0)
    plan = TrotterPlan(config.plan_t, config.plan_r)
    if config.formalism == "second":
        layout = ModeLayout(config.m)
        occupied = tuple(
            (site, UP if spin == "up" else DOWN) for site, spin in config.particles
        )
        bits = encode_occupation(layout, occupied)
        state = init_basis_state(layout.register_layout(), bits, config.backend)
        trotter_evolve(state, lattice, params, plan)
        counts = op_count(lattice, plan)
    else:
        layout = FirstQuantizedLayout(n=len(config.particles), m=config.m)
        state = prepare_antisymmetric(
            layout, config.particles, mode=config.mode, backend=config.backend
        )
        trotter_evolve_fq(state, layout, params, plan, mode=config.mode)
        counts = op_count_fq(layout, plan)

    sampling_plan = None
    if config.sampling is not None:
        sampling_plan = SamplingPlan(
            seed=config.sampling.seed,
            n_trials=config.sampling.n_trials,
            epsilon=config.sampling.epsilon,
        )
    measured = [
        _evaluate(entry, state, layout, params, lattice, sampling_plan)
        for entry in config.observables
    ]
    return {
        "config": config.to_dict(),
        "library_version": __version__,
        "seed": config.sampling.seed if config.sampling else None,
        "op_counts": {k: int(v) for k, v in counts.items()},
        "observables": measured,
        "wall_time_s": time.perf_counter() - started,
    }


def _csv_rows(document):
    for obs in document["observables"]:
        kind = obs["kind"]
        if kind == "energy":
            for part in ("potential", "kinetic", "total"):
                yield (kind, part, obs[part], None, None)
        elif kind in ("pair_correlation", "k_point_correlation"):
            index = "-".join(str(s) for s in obs["sites"])
            yield (kind, index, obs["exact"], obs["sampled"], obs["stderr"])
        elif kind == "momentum_distribution":
            for row in obs["values"]:
                index = f"p{obs['particle']}-k{row['index']}"
                yield (kind, index, row["exact"], row["sampled"], row["stderr"])
        else:
            for row in obs["values"]:
                yield (kind, row["index"], row["exact"], row["sampled"], row["stderr"])


def _write_outputs(document: dict, output: Path) -> None:
    output.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    with output.with_suffix(".csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("observable", "index", "exact", "sampled", "stderr"))
        for kind, index, exact, sampled, stderr in _csv_rows(document):
            writer.writerow((
                kind,
                index,
                repr(float(exact)),
                "" if sampled is None else repr(float(sampled)),
                "" if stderr is None else repr(float(stderr)),
            ))


# --------------------------------------------------------------- subcommands


def cmd_evolve(config_path: str, output_path: str,
               backend_override: str | None = None,
               seed_override: int | None = None) -> int:
    path = Path(config_path)
    try:
        text = path.read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"error: {path}:{exc.lineno}:{exc.colno}: {exc.msg}", file=sys.stderr)
        return 2
    try:
        config = parse_config(raw)
        if backend_override is not None:
            config = replace(config, backend=backend_override)
        if seed_override is not None:
            if config.sampling is None:
                raise ConfigError("--seed: config has no sampling block to reseed")
            if seed_override < 0:
                raise ConfigError(f"--seed: must be nonnegative, got {seed_override}")
            config = replace(config, sampling=replace(config.sampling, seed=seed_override))
    except ConfigError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return 2
    try:
        document = execute_run(config)
    except InvariantViolation as exc:
        print(f"error: internal invariant violated: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return 2
    _write_outputs(document, Path(output_path))
    return 0


def cmd_antisym(labels, mode: str, output_path: str) -> int:
    try:
        labels = tuple(int(v) for v in labels)
    except (TypeError, ValueError):
        print(f"error: labels must be integers, got {labels!r}", file=sys.stderr)
        return 2
    if not labels or any(v < 1 for v in labels):
        print(f"error: labels must be positive, got {list(labels)}", file=sys.stderr)
        return 2
    if any(a >= b for a, b in zip(labels, labels[1:])):
        print(f"error: labels must be strictly increasing, got {list(labels)}", file=sys.stderr)
        return 2
    if mode not in ("fermi", "bose"):
        print(f"error: unknown statistics mode {mode!r}", file=sys.stderr)
        return 2

    n = len(labels)
    word_bits = max(2, max(labels).bit_length())
    bank = RegisterBank(QuWordLayout(n, word_bits))
    try:
        state = prepare_ordered_input(bank, labels)
        antisymmetrize(state, bank, mode)
        out = collapse_ancillas(state, bank)
    except InvariantViolation as exc:
        print(f"error: internal invariant violated: {exc}", file=sys.stderr)
        return 1

    want = slater_antisymmetrize(labels, mode)
    amplitudes = []
    overlap = 0j
    for b in out.support():
        perm = tuple(v + 1 for v in bank.get_words(b, "A"))
        amp = complex(out.amplitude(b))
        overlap += complex(want.get(perm, 0.0)).conjugate() * amp
        amplitudes.append({"labels": list(perm), "re": amp.real, "im": amp.imag})
    amplitudes.sort(key=lambda entry: entry["labels"])
    document = {
        "n": n,
        "labels": list(labels),
        "mode": mode,
        "amplitudes": amplitudes,
        "fidelity": abs(overlap) ** 2,
        "library_version": __version__,
    }
    Path(output_path).write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_validate(suite: str) -> int:
    if suite not in SUITES:
        known = ", ".join(sorted(SUITES))
        print(f"error: unknown suite {suite!r}; expected one of {known}", file=sys.stderr)
        return 2
    results = run_suite(suite)
    header = f"{'suite':<12} {'check':<26} {'measured':>14} {'bound':<22} result"
    print(header)
    print("-" * len(header))
    for r in results:
        verdict = "pass" if r.passed else "FAIL"
        print(f"{r.suite:<12} {r.name:<26} {r.measured:>14.6g} {r.bound:<22} {verdict}")
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fermisim",
        description="Simulate Hubbard-chain evolutions in either fermionic encoding.",
    )
    parser.add_argument(
        "--validation-mode", action="store_true",
        help="enable exhaustive internal checks (slow, diagnostic runs only)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    evolve = sub.add_parser("evolve", help="run a configured Trotter evolution")
    evolve.add_argument("--config", required=True, help="path to a JSON run config")
    evolve.add_argument("--output", required=True,
                        help="result document path; a CSV lands next to it")
    evolve.add_argument("--backend", choices=("dense", "sparse"),
                        help="override the config's state backend")
    evolve.add_argument("--seed", type=int, help="override the sampling seed")

    antisym = sub.add_parser("antisym", help="antisymmetrize one ordered configuration")
    antisym.add_argument("--labels", required=True,
                         help="comma-separated strictly increasing labels, e.g. 1,3,4")
    antisym.add_argument("--mode", choices=("fermi", "bose"), default="fermi")
    antisym.add_argument("--output", required=True, help="amplitude-map document path")

    validate = sub.add_parser("validate", help="run a named self-check suite")
    validate.add_argument("suite", help="one of: " + ", ".join(sorted(SUITES)))
    return parser


def main(argv=None) -> int:
    threads = os.environ.get(THREAD_ENV_VAR)
    if threads is not None and (not threads.isdigit() or int(threads) < 1):
        print(f"error: {THREAD_ENV_VAR} must be a positive integer, got {threads!r}",
              file=sys.stderr)
        return 2
    args = build_parser().parse_args(argv)
    if args.validation_mode:
        set_validation_mode(True)
    if args.command == "evolve":
        return cmd_evolve(args.config, args.output,
                          backend_override=args.backend, seed_override=args.seed)
    if args.command == "antisym":
        return cmd_antisym(args.labels.split(","), args.mode, args.output)
    return cmd_validate(args.suite)


if __name__ == "__main__":
    sys.exit(main())
