import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from core.config import AppConfig, PipelineConfig
from core.constants import MAPS_EXTENSION, WEIGHTS_EXTENSION, SynthStyle, Variant
from core.types import ConfidenceMaps
from detection.pipeline import detect_baselines
from evaluation.matching import evaluate_pages
from groundtruth.oracle import render_oracle_maps, render_page_image
from groundtruth.pixel_gt import generate_pixel_gt
from groundtruth.synthesis import synth_corpus
from npl.architecture import NplArchitecture, init_weights
from npl.network import npl_forward
from npl.preprocessing import preprocess, resize_maps
from npl.weights import WeightStore
from storage.baseline_json import BaselineDocument
from storage.repository import FileRepository
from utils.image_utils import render_overlay
from utils.logging_utils import get_logger, log_timing


@dataclass
class PipelineRun:
    inputs: List[Path]
    config: Dict
    timings: Dict[str, float] = field(default_factory=dict)
    outputs: List[Path] = field(default_factory=list)


class DetectionService:
    """File-level operations behind the command-line commands."""

    def __init__(self, config: Optional[AppConfig] = None,
                 pipeline_config: Optional[PipelineConfig] = None,
                 repository: Optional[FileRepository] = None):
        self.config = config or AppConfig()
        self.pipeline_config = pipeline_config or PipelineConfig()
        self.repository = repository or FileRepository(self.config)
        self.logger = logging.getLogger(__name__)
        self._weights: Dict[Path, WeightStore] = {}
        self._weights_lock = threading.Lock()

    def run_batch(self, jobs: Sequence[Callable[[], PipelineRun]], threads: Optional[int] = None) -> List[PipelineRun]:
        """Run independent jobs on a thread pool; results keep the job order."""
        workers = max(1, min(threads or self.config.max_threads, len(jobs) or 1))
        if workers == 1:
            return [job() for job in jobs]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(job) for job in jobs]
            return [future.result() for future in futures]

    def _load_weights(self, path: Path) -> WeightStore:
        path = Path(path)
        with self._weights_lock:
            if path not in self._weights:
                self._weights[path] = self.repository.load_weights(path)
            return self._weights[path]

    def _infer_maps(self, image_path: Path, weights_path: Path, variant: Variant,
                    timings: Dict[str, float]) -> ConfidenceMaps:
        log = get_logger(__name__, {'page': Path(image_path).name})
        image = self.repository.load_image(image_path)
        weights = self._load_weights(weights_path)
        with log_timing(log, 'inference', timings):
            prepared = preprocess(image)
            maps = npl_forward(prepared.tensor, weights, NplArchitecture(variant=variant))
        return resize_maps(maps, *image.shape)

    def infer(self, image_path: Path, weights_path: Path, out_dir: Path,
              variant: Variant = Variant.ARU) -> PipelineRun:
        run = PipelineRun([Path(image_path), Path(weights_path)], {'variant': Variant(variant).value})
        maps = self._infer_maps(image_path, weights_path, Variant(variant), run.timings)
        out = Path(out_dir) / f"{Path(image_path).stem}{MAPS_EXTENSION}"
        run.outputs.append(self.repository.save_maps(out, maps))
        return run

    def detect(self, out_dir: Path, maps_path: Optional[Path] = None, image_path: Optional[Path] = None,
               weights_path: Optional[Path] = None, regions_path: Optional[Path] = None,
               variant: Variant = Variant.ARU, overlay: bool = False) -> PipelineRun:
        """Detect baselines from stored maps or from an image and weights; writes ``<stem>.json``."""
        source = Path(maps_path or image_path)
        run = PipelineRun([source], self.pipeline_config.to_dict())
        if maps_path is not None:
            maps = self.repository.load_maps(maps_path)
        else:
            run.inputs.append(Path(weights_path))
            maps = self._infer_maps(image_path, weights_path, Variant(variant), run.timings)

        regions = []
        if regions_path is not None:
            run.inputs.append(Path(regions_path))
            regions = self.repository.load_document(regions_path).regions

        result = detect_baselines(maps, self.pipeline_config, regions or None, name=source.name)
        run.timings.update(result.timings)
        doc = BaselineDocument(maps.width, maps.height, result.baselines, regions, run.config)
        out_dir = Path(out_dir)
        run.outputs.append(self.repository.save_document(out_dir / f"{source.stem}.json", doc))

        if overlay:
            background = self.repository.load_image(image_path) if image_path is not None else maps.baseline
            run.outputs.append(self.repository.write_bytes(
                out_dir / f"{source.stem}.overlay.png", render_overlay(background, result.baselines)))
        self.logger.info(f"{source.name}: {len(result.baselines)} baselines "
                         f"({', '.join(f'{k} {v:.2f}s' for k, v in run.timings.items())})")
        return run

    def gtgen(self, document_path: Path, out_dir: Path) -> PipelineRun:
        """Pixel ground truth planes of a baseline document, stored as a three-channel map file."""
        doc = self.repository.load_document(document_path)
        run = PipelineRun([Path(document_path)], {})
        with log_timing(self.logger, 'gtgen', run.timings):
            gt = generate_pixel_gt((doc.height, doc.width), doc.baselines)
        out = Path(out_dir) / f"{Path(document_path).stem}.gt{MAPS_EXTENSION}"
        run.outputs.append(self.repository.save_planes(out, gt.planes.astype('float32')))
        return run

    def synth(self, n_pages: int, seed: int, out_dir: Path, style: SynthStyle = SynthStyle.STRAIGHT,
              rotation_range: float = math.pi / 4, blur_sigma: float = 1.5, noise_amp: float = 0.0,
              images: bool = True) -> PipelineRun:
        """Synthetic pages: ground-truth JSON, oracle maps and optionally a rendered image each."""
        run = PipelineRun([], {'pages': n_pages, 'seed': seed, 'style': SynthStyle(style).value,
                               'blur_sigma': blur_sigma, 'noise_amp': noise_amp})
        out_dir = Path(out_dir)
        pages = synth_corpus(n_pages, seed, SynthStyle(style), rotation_range)
        for i, page in enumerate(pages):
            stem = f"page_{i:04d}"
            doc = BaselineDocument(page.width, page.height, list(page.baselines), list(page.regions))
            run.outputs.append(self.repository.save_document(out_dir / f"{stem}.json", doc))
            maps = render_oracle_maps(page, blur_sigma, noise_amp, seed=page.seed)
            run.outputs.append(self.repository.save_maps(out_dir / f"{stem}{MAPS_EXTENSION}", maps))
            if images:
                run.outputs.append(self.repository.save_image(out_dir / f"{stem}.png",
                                                              render_page_image(page, seed=page.seed)))
        return run

    def evaluate(self, gt_paths: Sequence[Path], hyp_paths: Sequence[Path], out_dir: Path,
                 tolerance: Optional[float] = None) -> PipelineRun:
        """Pairs ground-truth and detection documents in the given order; writes ``report.json``."""
        pages = []
        for gt_path, hyp_path in zip(gt_paths, hyp_paths):
            gt = self.repository.load_document(gt_path)
            hyp = self.repository.load_document(hyp_path)
            pages.append((Path(hyp_path).stem, gt.baselines, hyp.baselines))
        report = evaluate_pages(pages, tolerance)
        run = PipelineRun([*map(Path, gt_paths), *map(Path, hyp_paths)], {'tolerance': tolerance})
        run.outputs.append(self.repository.save_json(Path(out_dir) / "report.json", report.to_dict()))
        self.logger.info(f"P={report.precision:.4f} R={report.recall:.4f} F={report.f_value:.4f} "
                         f"over {len(pages)} pages")
        return run

    def write_weights(self, out_dir: Path, variant: Variant = Variant.ARU, seed: int = 0) -> PipelineRun:
        arch = NplArchitecture(variant=Variant(variant))
        weights = init_weights(arch, seed)
        run = PipelineRun([], {'variant': arch.variant.value, 'seed': seed,
                               'parameters': weights.parameter_count()})
        out = Path(out_dir) / f"{arch.variant.value.lower()}{WEIGHTS_EXTENSION}"
        run.outputs.append(self.repository.save_weights(out, weights))
        return run
