"""
Command-line entry point for outfitgen

Subcommands cover the whole benchmark lifecycle: synthetic data generation,
training, evaluation, outfit generation, report comparison and serving.
Exit codes: 0 ok, 1 usage, 2 data, 3 runtime.
"""
import logging
import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add project root to Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from config.settings import settings
from src.errors import EXIT_OK, EXIT_USAGE, OutfitGenError, exit_code_for

logger = logging.getLogger(__name__)


def setup_logging(log_level: Optional[str] = None, log_file: Optional[Path] = None):
    """Configure the root logger once: rich console output plus an optional file"""
    handlers: List[logging.Handler] = [RichHandler(rich_tracebacks=True, show_path=False)]
    log_file = log_file or settings.log_file
    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
        handlers.append(file_handler)
    logging.basicConfig(level=log_level or settings.log_level, format="%(message)s", handlers=handlers,
                        force=True)


class CLIParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _overrides(args) -> dict:
    return {"epochs": getattr(args, "epochs", None), "output_dir": getattr(args, "output_dir", None),
            "data_dir": getattr(args, "data_dir", None), "threads": getattr(args, "threads", None)}


def cmd_gen_data(args) -> int:
    from src.synthgen import GeneratorConfig, generate_dataset, sanity_floor, world_for

    config = GeneratorConfig(seed=args.seed, num_items=args.num_items, num_outfits=args.num_outfits,
                             num_users=args.num_users, num_click_samples=args.num_click_samples,
                             num_questionnaire_users=args.num_questionnaire_users)
    dataset = generate_dataset(config, max_workers=args.threads or settings.num_threads)
    dataset_id = dataset.save(Path(args.out))
    Console().print(f"Dataset [bold]{dataset_id[:12]}[/bold] written to {args.out}: "
                    f"{len(dataset.catalog)} items, {len(dataset.outfits)} outfits, "
                    f"{len(dataset.click_samples)} click samples, "
                    f"{len(dataset.questionnaire_samples)} questionnaire samples")
    if args.sanity_floor:
        floor = sanity_floor(world_for(dataset), dataset.catalog, dataset.outfits, args.seed)
        Console().print(f"Logistic pair baseline CP-AUC: {floor:.3f}")
    return EXIT_OK


def cmd_train(args) -> int:
    from src.harness import load_experiment_config, prepare_data, train_model

    config = load_experiment_config(Path(args.config), _overrides(args))
    data = prepare_data(config)
    _, trainer, completed = train_model(config, data, resume=not args.no_resume)
    for stats in trainer.history:
        Console().print(f"epoch {stats.epoch}: loss {stats.loss:.4f} ({stats.seconds:.1f}s)")
    Console().print(f"{config.name}: {completed} epochs completed; checkpoints in {config.run_dir}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from src.errors import CheckpointError
    from src.evaluation import print_reports, write_reports
    from src.harness import CheckpointManager, evaluate_model, load_checkpoint, load_experiment_config, \
        prepare_data, restore_model

    config = load_experiment_config(Path(args.config), _overrides(args))
    data = prepare_data(config)
    latest = CheckpointManager(config.run_dir / "checkpoints").latest()
    if latest is None:
        raise CheckpointError(f"No checkpoint under {config.run_dir}; run `train` first")
    model = restore_model(load_checkpoint(latest), data.dataset.catalog)
    report = evaluate_model(model, config, data)
    write_reports(config.run_dir / "report.jsonl", [report])
    print_reports([report])
    return EXIT_OK


def cmd_run(args) -> int:
    from src.evaluation import print_reports
    from src.harness import load_experiment_config, run_experiment

    config = load_experiment_config(Path(args.config), _overrides(args))
    manifest, report = run_experiment(config, resume=not args.no_resume)
    print_reports([report])
    Console().print(f"Manifest: {config.run_dir / 'manifest.json'}")
    return EXIT_OK


def cmd_generate(args) -> int:
    from src.catalog import load_dataset
    from src.catalog.io import read_users, write_outfits
    from src.errors import InputError
    from src.generation import GenerationRequest, build_candidate_index, generate_outfits
    from src.harness import load_model
    from src.models import SiameseModel

    dataset = load_dataset(Path(args.data_dir or settings.data_dir))
    model = load_model(Path(args.checkpoint), dataset.catalog)
    context, anchor = None, args.anchor
    if args.users:
        samples = read_users(Path(args.users))
        if args.sample_id:
            samples = [s for s in samples if s.sample_id == args.sample_id]
        if not samples:
            raise InputError(f"No user sample '{args.sample_id}' in {args.users}")
        context = samples[0].context
        anchor = anchor or samples[0].anchor
    index = None
    if isinstance(model, SiameseModel) and anchor:
        index = build_candidate_index([anchor], dataset.outfits, model.score_outfits, dataset.catalog, args.seed)
    request = GenerationRequest(anchor=anchor, context=context, count=args.count, beam_width=args.beam_width,
                                temperature=args.temperature, gibbs_iters=args.gibbs_iters,
                                fixed_length=args.fixed_length, seed=args.seed)
    outfits = generate_outfits(model, request, index)
    if args.out:
        write_outfits(Path(args.out), outfits)

    table = Table(title=f"{model.family} outfits")
    table.add_column("#", justify="right")
    table.add_column("items")
    table.add_column("categories")
    for number, outfit in enumerate(outfits, start=1):
        categories = [dataset.catalog.schema.categories[dataset.catalog.category_of(i)] for i in outfit.items]
        table.add_row(str(number), " ".join(outfit.items), " ".join(categories))
    Console().print(table)
    return EXIT_OK


def cmd_compare(args) -> int:
    from src.evaluation import read_reports
    from src.harness import compare, print_comparison

    reports = [report for path in args.reports for report in read_reports(Path(path))]
    print_comparison(compare(reports))
    return EXIT_OK


def cmd_report(args) -> int:
    from src.evaluation import print_reports, read_reports

    reports = [report for path in args.reports for report in read_reports(Path(path))]
    print_reports(reports)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    from src.harness import print_comparison, run_benchmark

    _, comparison = run_benchmark(Path(args.experiments or settings.experiments_path), args.seeds,
                                  _overrides(args))
    print_comparison(comparison)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    settings.serve_run_dir = Path(args.run_dir)
    logger.info(f"Serving runs under {settings.serve_run_dir} on {args.host}:{args.port}")
    uvicorn.run("src.api.main:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = CLIParser(
        description="outfitgen: outfit compatibility and personalized outfit generation benchmark",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run.py gen-data --out data/synthetic
  python run.py run data/experiments/gpt.yaml
  python run.py generate --checkpoint runs/gpt/checkpoints/epoch-0010.ckpt --anchor i00042
  python run.py compare runs/*/report.jsonl
  python run.py benchmark --seeds 0 1 2
        """
    )
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default=None,
                        help=f"Log level (default: {settings.log_level})")
    parser.add_argument("--log-file", type=Path, default=None, help="Also write the log to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="Generate a synthetic dataset with a planted compatibility rule")
    gen.add_argument("--out", default=str(settings.data_dir), help="Dataset directory to write")
    gen.add_argument("--seed", type=int, default=0, help="Data seed")
    gen.add_argument("--num-items", type=int, default=5000, help="Catalog size")
    gen.add_argument("--num-outfits", type=int, default=20000, help="Curated outfits")
    gen.add_argument("--num-users", type=int, default=10000, help="Synthetic shoppers behind the click data")
    gen.add_argument("--num-click-samples", type=int, default=10000, help="(actions, outfit) click samples")
    gen.add_argument("--num-questionnaire-users", type=int, default=2000, help="Stylist customers")
    gen.add_argument("--threads", type=int, default=None, help="Worker threads for sharded generation")
    gen.add_argument("--sanity-floor", action="store_true", help="Also train the logistic pair baseline")
    gen.set_defaults(handler=cmd_gen_data)

    for name, handler, text in (("train", cmd_train, "Train a model, resuming from its latest checkpoint"),
                                ("eval", cmd_eval, "Evaluate the latest checkpoint of an experiment"),
                                ("run", cmd_run, "Train and evaluate an experiment end to end")):
        command = sub.add_parser(name, help=text)
        command.add_argument("config", help="Experiment YAML file")
        command.add_argument("--epochs", type=int, default=None, help="Override the configured epochs")
        command.add_argument("--data-dir", default=None, help="Override the dataset directory")
        command.add_argument("--output-dir", default=None, help="Override the output directory")
        command.add_argument("--threads", type=int, default=None, help="Override the thread count")
        if name != "eval":
            command.add_argument("--no-resume", action="store_true", help="Ignore existing checkpoints")
        command.set_defaults(handler=handler)

    generate = sub.add_parser("generate", help="Generate outfits from a checkpoint")
    generate.add_argument("--checkpoint", required=True, help="Checkpoint file")
    generate.add_argument("--data-dir", default=None, help="Dataset directory holding the catalog")
    generate.add_argument("--users", default=None, help="User sample file (clicks or questionnaires)")
    generate.add_argument("--sample-id", default=None, help="User sample to take the context from")
    generate.add_argument("--anchor", default=None, help="Anchor item id to build around")
    generate.add_argument("--beam-width", type=int, default=None, help="Beam search with this width")
    generate.add_argument("--temperature", type=float, default=1.0, help="Sampling temperature; 0 is argmax")
    generate.add_argument("--gibbs-iters", type=int, default=None, help="Gibbs iterations (default 10x length)")
    generate.add_argument("--fixed-length", type=int, default=None, help="Generate exactly this many items")
    generate.add_argument("--count", type=int, default=1, help="Number of sampled outfits")
    generate.add_argument("--seed", type=int, default=0, help="Sampling seed")
    generate.add_argument("--out", default=None, help="Write outfits to this file")
    generate.set_defaults(handler=cmd_generate)

    comparison = sub.add_parser("compare", help="Compare reports and check the directional claims")
    comparison.add_argument("reports", nargs="+", help="Report files")
    comparison.set_defaults(handler=cmd_compare)

    report = sub.add_parser("report", help="Print reports as a table")
    report.add_argument("reports", nargs="+", help="Report files")
    report.set_defaults(handler=cmd_report)

    bench = sub.add_parser("benchmark", help="Run every default experiment over several seeds and compare")
    bench.add_argument("--experiments", default=None, help="Directory of experiment YAML files")
    bench.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2], help="Init/eval seeds")
    bench.add_argument("--epochs", type=int, default=None, help="Override the configured epochs")
    bench.add_argument("--data-dir", default=None, help="Override the dataset directory")
    bench.add_argument("--output-dir", default=None, help="Override the output directory")
    bench.set_defaults(handler=cmd_benchmark)

    serve = sub.add_parser("serve", help="Serve finished runs over HTTP")
    serve.add_argument("--run-dir", default=str(settings.serve_run_dir), help="Directory of finished runs")
    serve.add_argument("--host", default=settings.api_host, help=f"Host (default: {settings.api_host})")
    serve.add_argument("--port", type=int, default=settings.api_port, help=f"Port (default: {settings.api_port})")
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level, args.log_file)
    logger.info(f"outfitgen {args.command}")
    try:
        code = args.handler(args)
    except KeyboardInterrupt:
        logger.info("Interrupted")
        code = exit_code_for(KeyboardInterrupt())
    except OutfitGenError as e:
        logger.error(f"{type(e).__name__}: {e}")
        code = exit_code_for(e)
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        code = exit_code_for(e)
    return code


if __name__ == "__main__":
    sys.exit(main())
