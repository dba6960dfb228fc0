"""Argument parsing and command handlers."""
import argparse
import logging
import math
from dataclasses import fields
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.config import AppConfig, PipelineConfig, read_overrides
from core.constants import ALLOWED_IMAGE_EXTENSIONS, MAPS_EXTENSION, WEIGHTS_EXTENSION, SynthStyle, Variant
from core.exceptions import ValidationError
from storage.service import DetectionService, PipelineRun
from utils.validators import validate_input_file, validate_output_dir, validate_positive

logger = logging.getLogger(__name__)


def _flag(name: str) -> str:
    return '--' + name.replace('_', '-')


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', type=Path, required=True, help="output directory")
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--config', type=Path, help="key=value file or detection JSON; overrides flags")
    common.add_argument('--threads', type=int, help="worker threads for multiple inputs")
    common.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    common.add_argument('--log-json', action='store_true', help="log JSON lines")
    common.add_argument('--log-file', type=Path, help="also log to a rotating file")

    group = common.add_argument_group('pipeline constants')
    for f in fields(PipelineConfig):
        group.add_argument(_flag(f.name), dest=f"cfg_{f.name}", metavar='VALUE',
                           help=f"default: {f.default}")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='aru-baselines',
                                     description="Baseline detection on document images.")
    sub = parser.add_subparsers(dest='command', required=True)
    common = _common_parser()

    detect = sub.add_parser('detect', parents=[common], help="detect baselines from maps or images")
    detect.add_argument('--maps', type=Path, nargs='+', help=f"confidence maps ({MAPS_EXTENSION})")
    detect.add_argument('--image', type=Path, nargs='+', help="8-bit PNG or PGM pages")
    detect.add_argument('--weights', type=Path, help=f"network weights ({WEIGHTS_EXTENSION})")
    detect.add_argument('--variant', choices=[v.value for v in Variant], default=Variant.ARU.value)
    detect.add_argument('--regions', type=Path, help="JSON document whose regions restrict clustering")
    detect.add_argument('--overlay', action='store_true', help="also write <name>.overlay.png")

    infer = sub.add_parser('infer', parents=[common], help="run the pixel labeler")
    infer.add_argument('--image', type=Path, nargs='+', required=True)
    infer.add_argument('--weights', type=Path, required=True)
    infer.add_argument('--variant', choices=[v.value for v in Variant], default=Variant.ARU.value)

    gtgen = sub.add_parser('gtgen', parents=[common], help="pixel ground truth from baseline JSON")
    gtgen.add_argument('--json', type=Path, nargs='+', required=True)

    synth = sub.add_parser('synth', parents=[common], help="synthetic pages with known baselines")
    synth.add_argument('--pages', type=int, default=1)
    synth.add_argument('--style', choices=[s.value for s in SynthStyle], default=SynthStyle.STRAIGHT.value)
    synth.add_argument('--rotation-range', type=float, default=45.0, help="degrees, for rotated pages")
    synth.add_argument('--blur', type=float, default=1.5)
    synth.add_argument('--noise', type=float, default=0.0)
    synth.add_argument('--no-images', action='store_true')

    evaluate = sub.add_parser('eval', parents=[common], help="compare detections with ground truth")
    evaluate.add_argument('--gt', type=Path, nargs='+', required=True)
    evaluate.add_argument('--hyp', type=Path, nargs='+', required=True)
    evaluate.add_argument('--tol', type=float, help="coverage tolerance in pixels (default per page)")

    weights = sub.add_parser('weights', parents=[common], help="write deterministic random weights")
    weights.add_argument('--variant', choices=[v.value for v in Variant], default=Variant.ARU.value)
    return parser


def pipeline_config_from_args(args: argparse.Namespace) -> PipelineConfig:
    """Flags first, then keys from ``--config`` on top."""
    data: Dict[str, Any] = {}
    for f in fields(PipelineConfig):
        value = getattr(args, f"cfg_{f.name}", None)
        if value is not None:
            data[f.name] = value
    if getattr(args, 'config', None) is not None:
        ok, problem = validate_input_file(args.config, '--config')
        if not ok:
            raise ValidationError(problem, field='--config', value=str(args.config))
        data.update(read_overrides(args.config))
    return PipelineConfig.from_dict(data)


def _require(ok_problem, field: str) -> None:
    ok, problem = ok_problem
    if not ok:
        raise ValidationError(problem, field=field)


def _require_files(paths: Optional[List[Path]], flag: str, extensions=()) -> None:
    for path in paths or []:
        _require(validate_input_file(path, flag, extensions), flag)


def _report(runs: List[PipelineRun]) -> None:
    for run in runs:
        for path in run.outputs:
            print(path)


def cmd_detect(args: argparse.Namespace, service: DetectionService) -> int:
    if bool(args.maps) == bool(args.image):
        raise ValidationError("give exactly one of --maps or --image", field='--maps')
    if args.image and args.weights is None:
        raise ValidationError("--image needs --weights", field='--weights')
    _require_files(args.maps, '--maps')
    _require_files(args.image, '--image', ALLOWED_IMAGE_EXTENSIONS)
    if args.weights is not None and args.image:
        _require(validate_input_file(args.weights, '--weights'), '--weights')
    if args.regions is not None:
        _require(validate_input_file(args.regions, '--regions'), '--regions')

    variant = Variant(args.variant)
    if args.maps:
        jobs = [partial(service.detect, args.out, maps_path=path, regions_path=args.regions,
                        overlay=args.overlay) for path in args.maps]
    else:
        jobs = [partial(service.detect, args.out, image_path=path, weights_path=args.weights,
                        regions_path=args.regions, variant=variant, overlay=args.overlay)
                for path in args.image]
    _report(service.run_batch(jobs, args.threads))
    return 0


def cmd_infer(args: argparse.Namespace, service: DetectionService) -> int:
    _require_files(args.image, '--image', ALLOWED_IMAGE_EXTENSIONS)
    _require(validate_input_file(args.weights, '--weights'), '--weights')
    variant = Variant(args.variant)
    jobs = [partial(service.infer, path, args.weights, args.out, variant) for path in args.image]
    _report(service.run_batch(jobs, args.threads))
    return 0


def cmd_gtgen(args: argparse.Namespace, service: DetectionService) -> int:
    _require_files(args.json, '--json')
    jobs = [partial(service.gtgen, path, args.out) for path in args.json]
    _report(service.run_batch(jobs, args.threads))
    return 0


def cmd_synth(args: argparse.Namespace, service: DetectionService) -> int:
    _require(validate_positive(args.pages, '--pages'), '--pages')
    run = service.synth(args.pages, args.seed, args.out, SynthStyle(args.style),
                        rotation_range=math.radians(args.rotation_range), blur_sigma=args.blur,
                        noise_amp=args.noise, images=not args.no_images)
    _report([run])
    return 0


def cmd_eval(args: argparse.Namespace, service: DetectionService) -> int:
    if len(args.gt) != len(args.hyp):
        raise ValidationError(f"--gt has {len(args.gt)} files but --hyp has {len(args.hyp)}", field='--hyp')
    _require_files(args.gt, '--gt')
    _require_files(args.hyp, '--hyp')
    if args.tol is not None:
        _require(validate_positive(args.tol, '--tol'), '--tol')
    _report([service.evaluate(args.gt, args.hyp, args.out, args.tol)])
    return 0


def cmd_weights(args: argparse.Namespace, service: DetectionService) -> int:
    run = service.write_weights(args.out, Variant(args.variant), args.seed)
    print(run.config['parameters'])
    _report([run])
    return 0


HANDLERS = {
    'detect': cmd_detect,
    'infer': cmd_infer,
    'gtgen': cmd_gtgen,
    'synth': cmd_synth,
    'eval': cmd_eval,
    'weights': cmd_weights,
}


def run_command(args: argparse.Namespace, config: AppConfig) -> int:
    _require(validate_output_dir(args.out), '--out')
    if args.threads is not None:
        _require(validate_positive(args.threads, '--threads'), '--threads')
    service = DetectionService(config, pipeline_config_from_args(args))
    logger.debug(f"running '{args.command}' with {service.pipeline_config.to_dict()}")
    return HANDLERS[args.command](args, service)
