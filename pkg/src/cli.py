"""
Interface de linha de comando dos experimentos de focalização

    pmfocus oracle  --config exp.yaml --out data/output/oracle
    pmfocus train   --seed 7 --max-steps 20000
    pmfocus compare --override compare.modules=[0,1]
    pmfocus map     --vector data/output/beam_vector.json
    pmfocus bfr     --map data/output/maps/focal_plane.csv --eta 0.8
    pmfocus knn-dump --indices 0,3,15 --k 8
    pmfocus check
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from beamforming.codebook import BeamVector, PhaseCodebook
from config.loader import ExperimentConfig, load_config
from config.settings import OUTPUT_LAYOUT
from learning.knn import knn, knn_bruteforce
from orchestration.experiment import map_metrics, run_experiment, run_map
from utils.exceptions import FocusBaseException, ValidationError
from utils.logger import attach_file_handler, set_level, setup_logger
from utils.seeding import SeedStreams
from validation.invariants import CHECKS, run_checks

logger = setup_logger(__name__)

EXIT_DOMAIN_ERROR = 2
EXIT_UNEXPECTED = 1


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="arquivo YAML de configuração")
    parser.add_argument("--seed", type=int, help="seed mestre (inteiro de 64 bits)")
    parser.add_argument("--out", type=Path, help="diretório de saída")
    parser.add_argument("--max-steps", type=int, help="passos máximos de treino por módulo")
    parser.add_argument("--variant", choices=["td3", "ddpg"], help="algoritmo dos agentes")
    parser.add_argument("--parallel", choices=["on", "off"], help="treino paralelo dos módulos")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override pontilhado da configuração (repetível)",
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING ...")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmfocus", description="Focalização de feixe com metassuperfícies modulares")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("oracle", "oráculo com CSI perfeita, fusão e mapas"),
        ("train", "treino distribuído de todos os módulos e fusão"),
        ("compare", "TD3 contra DDPG nos módulos escolhidos"),
    ):
        _add_common(sub.add_parser(name, help=help_text))

    map_parser = sub.add_parser("map", help="mapa de potência de um vetor salvo ou do oráculo")
    _add_common(map_parser)
    map_parser.add_argument("--vector", type=Path, help="beam_vector.json de uma execução anterior")

    bfr_parser = sub.add_parser("bfr", help="métricas de foco de um mapa salvo")
    bfr_parser.add_argument("--map", type=Path, required=True, dest="map_path")
    bfr_parser.add_argument("--dfp", type=float, nargs=3, metavar=("X", "Y", "Z"))
    bfr_parser.add_argument("--eta", type=float, default=0.8)
    bfr_parser.add_argument("--log-level", default=None)

    knn_parser = sub.add_parser("knn-dump", help="vizinhos quantizados de um vetor (depuração)")
    _add_common(knn_parser)
    knn_parser.add_argument("--indices", required=True, help="índices separados por vírgula")
    knn_parser.add_argument("--bits", type=int)
    knn_parser.add_argument("--k", type=int)
    knn_parser.add_argument("--wrap", action="store_true")
    knn_parser.add_argument("--brute", action="store_true", help="inclui a enumeração por força bruta")

    check_parser = sub.add_parser("check", help="executa a suíte de invariantes")
    check_parser.add_argument("--seed", type=int, default=0)
    check_parser.add_argument("--only", nargs="+", choices=sorted(CHECKS))
    check_parser.add_argument("--log-level", default=None)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides: List[str] = list(args.override)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out is not None:
        overrides.append(f"output_dir={json.dumps(str(args.out))}")
    if args.variant is not None:
        overrides.append(f"agent.variant={args.variant}")
    if args.parallel is not None:
        overrides.append(f"schedule.parallel={'true' if args.parallel == 'on' else 'false'}")

    config = load_config(args.config, overrides)
    if args.max_steps is not None:
        updates = {"schedule.max_steps": args.max_steps}
        if config.schedule.window >= args.max_steps:
            updates["schedule.window"] = max(1, args.max_steps // 2)
        kept = tuple(s for s in config.schedule.snapshot_steps if s <= args.max_steps)
        if kept != config.schedule.snapshot_steps:
            updates["schedule.snapshot_steps"] = list(kept)
        config = config.with_updates(**updates)
    return config


def _emit(data) -> None:
    print(json.dumps(data, sort_keys=True))


def _run_experiment_command(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    out = Path(config.output_dir)
    root = logging.getLogger()
    handler = attach_file_handler(root, out / OUTPUT_LAYOUT["log"])
    try:
        if args.command == "map":
            metrics = run_map(config, args.vector, out)
            _emit(metrics.to_dict())
            return 0
        result = run_experiment(config, args.command, out)
        logger.info(f"Resumo gravado em {out / OUTPUT_LAYOUT['summary']}")
        return 0 if result.manifest.status == "completed" else EXIT_DOMAIN_ERROR
    finally:
        root.removeHandler(handler)
        handler.close()


def _run_bfr(args: argparse.Namespace) -> int:
    _emit(map_metrics(args.map_path, args.dfp, args.eta).to_dict())
    return 0


def _run_knn_dump(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    bits = args.bits or config.bits
    k = args.k or config.agent.knn_k
    indices = [int(i) for i in args.indices.split(",") if i.strip()]
    w = BeamVector(indices, bits)
    rng = SeedStreams(config.seed).stream("knn")
    result = knn(w, k, PhaseCodebook(bits), rng, wrap=args.wrap)
    data = result.to_dict()
    if args.brute:
        data["bruteforce"] = knn_bruteforce(w, k, PhaseCodebook(bits), wrap=args.wrap).to_dict()
    _emit(data)
    return 0


def _run_check(args: argparse.Namespace) -> int:
    results = run_checks(args.seed, args.only)
    _emit(results)
    failed = {name: message for name, message in results.items() if message != "ok"}
    if failed:
        raise ValidationError(f"{len(failed)} verificação(ões) falharam: {sorted(failed)}")
    return 0


COMMANDS = {
    "oracle": _run_experiment_command,
    "train": _run_experiment_command,
    "compare": _run_experiment_command,
    "map": _run_experiment_command,
    "bfr": _run_bfr,
    "knn-dump": _run_knn_dump,
    "check": _run_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "log_level", None):
        set_level(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except FocusBaseException as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return EXIT_DOMAIN_ERROR
    except Exception as e:
        logger.exception("Erro inesperado")
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
