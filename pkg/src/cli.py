# src/cli.py

import argparse
import copy
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

from src import __version__
from src.core.config import load_config
from src.core.errors import Clh2dError
from src.core.rng import derive_rng
from src.core.serialization import dump_text, instance_to_dict, load_instance, punctured_to_dict, read_yaml, \
    triangulation_from_dict, triangulation_to_dict, witness_to_dict, write_yaml
from src.hamiltonian.clh_instance import classicalize, defected_toric_instance, max_commutator_residual, \
    random_defect_coefficients, scramble, surface_code_instance, toric_instance
from src.hamiltonian.operator_algebra import algebra_report, calibrate
from src.hamiltonian.partition import block_triangulation, build_superparticles, two_local_violations, \
    verify_quasi_euclidean
from src.hamiltonian.reduction import remove_all_classical
from src.hamiltonian.structure import classify_roles, fixable_set, main_lemma_violations, puncture, \
    special_qubits, verify_equivalence
from src.lattice.surface_complex import planar_grid, torus_grid
from src.synthesis import full_pipeline, np_certificate, verify_certificate

COMMANDS = ("validate", "analyze", "reduce", "equivalence", "puncture", "partition", "prepare", "certify", "gen")


@dataclass
class RunConfig:
    command: str
    inputs: List[str] = field(default_factory=list)
    seed: Optional[int] = None
    backend: str = "auto"
    caps: Dict[str, int] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    output: Optional[str] = None


def _size(text: str):
    try:
        n, m = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 3x3, got {text}")
    return n, m


def _tolerance_override(text: str):
    name, _, value = text.partition("=")
    if not value:
        raise argparse.ArgumentTypeError(f"--tol expects name=value, got {text}")
    return name, float(value)


class _Parser(argparse.ArgumentParser):
    """Usage errors exit 1; library errors keep exit code 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(description="Commuting local Hamiltonians on 2D surface complexes")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("family", nargs="?", choices=["toric", "planar"], help="Instance family for gen")
    parser.add_argument("--in", dest="inputs", action="append", default=[], help="Input instance file")
    parser.add_argument("--out", default=None, help="Output file (stdout when omitted)")
    parser.add_argument("--seed", type=int, default=None, help="Seed for every random stream")
    parser.add_argument("--backend", choices=["auto", "stabilizer", "statevector"], default=None)
    parser.add_argument("--method", choices=["auto", "exact", "stabilizer"], default="auto",
                        help="Punctured groundstate oracle")
    parser.add_argument("--max-sv-qubits", type=int, default=None)
    parser.add_argument("--ribbon-budget", type=int, default=None)
    parser.add_argument("--tol", type=_tolerance_override, action="append", default=[],
                        help="Tolerance override, e.g. --tol rank=1e-7")
    parser.add_argument("--config", default=None, help="Alternative config.yaml")
    parser.add_argument("--triangulation", default=None, help="Triangulation file")
    parser.add_argument("--block", type=int, default=None, help="Block side of a generated triangulation")
    parser.add_argument("--certificate", default=None, help="Certificate to verify (certify)")
    parser.add_argument("--workers", type=int, default=None, help="Worker processes for directory certification")
    parser.add_argument("--verbose", action="store_true")
    gen = parser.add_argument_group("gen")
    gen.add_argument("--size", type=_size, default=(3, 3))
    gen.add_argument("--closed", action="store_true", help="Require a closed complex (toric)")
    gen.add_argument("--scramble", type=int, default=None, help="Seed of local Haar rotations")
    gen.add_argument("--defects", type=int, default=None, help="Seed of random defect coefficients")
    gen.add_argument("--identity-stars", type=int, nargs="*", default=[])
    gen.add_argument("--identity-plaquettes", type=int, nargs="*", default=[])
    gen.add_argument("--classicalize", type=int, nargs="*", default=[])
    return parser


def _run_config(args, config: dict) -> RunConfig:
    if args.max_sv_qubits is not None:
        config["caps"]["statevector_max_qubits"] = args.max_sv_qubits
    if args.ribbon_budget is not None:
        config["caps"]["ribbon_budget"] = args.ribbon_budget
    for name, value in args.tol:
        config["tolerances"][name] = value
    if args.backend is not None:
        config["run"]["backend"] = args.backend
    if args.workers is not None:
        config["run"]["workers"] = args.workers
    return RunConfig(args.command, list(args.inputs), args.seed, config["run"]["backend"],
                     dict(config["caps"]), dict(config["tolerances"]), args.out)


TOOL = {"name": "clh2d", "version": __version__}


def _artifact(run: RunConfig, config: dict, payload: dict) -> dict:
    return {"tool": dict(TOOL), "run": asdict(run), "config": config, "result": payload}


def _single_input(run: RunConfig, parser: argparse.ArgumentParser) -> str:
    if len(run.inputs) != 1:
        parser.error(f"{run.command} needs exactly one --in")
    return run.inputs[0]


def _triangulation(args, instance, config):
    if args.triangulation:
        return triangulation_from_dict(read_yaml(args.triangulation))
    if args.block:
        return block_triangulation(instance.complex, args.block)
    return None


# Commands ------------------------------------------------------------

def cmd_gen(args, config) -> dict:
    n, m = args.size
    if args.family == "planar":
        complex_ = planar_grid(n, m)
        instance = surface_code_instance(complex_, args.identity_stars, args.identity_plaquettes, config)
    else:
        complex_ = torus_grid(n, m)
        if args.defects is not None:
            coefficients = random_defect_coefficients(complex_, derive_rng(args.defects, "defects"))
            instance = defected_toric_instance(complex_, coefficients, config)
        elif args.identity_stars or args.identity_plaquettes:
            instance = surface_code_instance(complex_, args.identity_stars, args.identity_plaquettes, config)
        else:
            instance = toric_instance(complex_, config)
    for q in args.classicalize:
        instance = classicalize(instance, q, config)
    if args.scramble is not None:
        instance = scramble(instance, args.scramble, config)
    return instance_to_dict(instance)


def cmd_validate(instance, args, config) -> dict:
    residual, pair = max_commutator_residual(instance)
    return {"valid": True, "qubits": instance.n, "sites": len(instance.sites), "locality": instance.locality,
            "closed": instance.complex.is_closed, "max_commutator_residual": residual}


def cmd_analyze(instance, args, config) -> dict:
    calibration = calibrate(instance, config)
    return {"algebras": algebra_report(instance, calibration), "calibration_identity": calibration.is_identity()}


def cmd_reduce(instance, args, config) -> dict:
    reduced, witness = remove_all_classical(instance, config)
    return {"witness": witness_to_dict(witness), "instance": instance_to_dict(reduced)}


def _calibrated(instance, config):
    reduced, witness = remove_all_classical(instance, config)
    calibration = calibrate(reduced, config)
    return calibration.apply(reduced, config), witness


def cmd_equivalence(instance, args, config) -> dict:
    calibrated, _ = _calibrated(instance, config)
    roles, _ = classify_roles(calibrated, config)
    return verify_equivalence(calibrated, roles, config)


def cmd_puncture(instance, args, config) -> dict:
    calibrated, _ = _calibrated(instance, config)
    roles, interior = classify_roles(calibrated, config)
    fixable = fixable_set(calibrated, config)
    punctured = puncture(calibrated, fixable, config)
    violations = main_lemma_violations(calibrated, interior, fixable)
    return {"special_qubits": len(special_qubits(roles)), "interior_terms": len(interior),
            "main_lemma_violations": [[list(a), list(b)] for a, b in violations],
            "punctured": punctured_to_dict(punctured)}


def cmd_partition(instance, args, config) -> dict:
    triangulation = _triangulation(args, instance, config)
    if triangulation is None:
        k = instance.locality
        triangulation = block_triangulation(instance.complex, config["partition"]["block_factor"] * k)
    ok, violations = verify_quasi_euclidean(instance.complex, triangulation, triangulation.r,
                                            triangulation.R, triangulation.D)
    calibrated, _ = _calibrated(instance, config)
    punctured = puncture(calibrated, fixable_set(calibrated, config), config)
    partition = build_superparticles(punctured, triangulation, config)
    return {"quasi_euclidean": ok, "triangulation_violations": violations,
            "triangulation": triangulation_to_dict(triangulation),
            "blocks": {str(label): sorted(edges, key=str) for label, edges in partition.blocks.items()},
            "max_block": partition.max_block, "size_bound": partition.size_bound,
            "two_local_violations": two_local_violations(punctured, partition)}


def cmd_prepare(instance, args, config) -> dict:
    state, report = full_pipeline(instance, args.seed, _triangulation(args, instance, config),
                                  config["run"]["backend"], args.method, config)
    return {"report": report.to_dict(), "state": state.dump()}


def _certify_path(path: str, config: dict) -> dict:
    try:
        return {"path": path, "certificate": np_certificate(load_instance(path, config), None, config)}
    except Clh2dError as e:
        return {"path": path, "error": e.to_dict()}


def cmd_certify(instance, args, config) -> dict:
    if args.certificate:
        certificate = read_yaml(args.certificate)
        # accept the artifact written by a previous certify run
        if "result" in certificate and "tool" in certificate:
            certificate = certificate["result"]
        return verify_certificate(instance, certificate, config)
    return np_certificate(instance, _triangulation(args, instance, config), config)


def certify_directory(directory: str, config: dict) -> dict:
    paths = sorted(os.path.join(directory, name) for name in os.listdir(directory)
                   if name.endswith((".yaml", ".yml", ".json")))
    workers = int(config["run"]["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_certify_path, paths, [config] * len(paths)))
    else:
        results = [_certify_path(p, config) for p in paths]
    return {"certificates": results}


HANDLERS = {
    "validate": cmd_validate,
    "analyze": cmd_analyze,
    "reduce": cmd_reduce,
    "equivalence": cmd_equivalence,
    "puncture": cmd_puncture,
    "partition": cmd_partition,
    "prepare": cmd_prepare,
    "certify": cmd_certify,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = copy.deepcopy(load_config(args.config))
    level = logging.DEBUG if args.verbose else getattr(logging, str(config["logging"]["level"]).upper(), logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")

    run_config = _run_config(args, config)
    if args.command == "prepare" and args.seed is None:
        parser.error("prepare measures and needs --seed")
    if any(value <= 0 for value in run_config.caps.values()):
        parser.error("caps must be positive")

    try:
        if args.command == "gen":
            if args.family is None:
                parser.error("gen needs a family: toric or planar")
            if args.family == "planar" and args.closed:
                parser.error("planar instances are never closed")
            # instance files stay loadable: complex and terms at the top level
            payload = {"tool": dict(TOOL), "config": config, **cmd_gen(args, config)}
            write_yaml(payload, run_config.output)
            return 0
        path = _single_input(run_config, parser)
        if args.command == "certify" and os.path.isdir(path):
            payload = certify_directory(path, config)
        else:
            instance = load_instance(path, config)
            payload = HANDLERS[args.command](instance, args, config)
        write_yaml(_artifact(run_config, config, payload), run_config.output)
        return 0
    except Clh2dError as e:
        sys.stderr.write(dump_text(e.to_dict()))
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
