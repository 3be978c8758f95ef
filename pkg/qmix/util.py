"""
Misc helpers: config composition, logging, parallel evaluation, random streams.
"""
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Iterable, List, Optional

import numpy as np
from hydra import compose, initialize_config_dir
from joblib import Parallel, delayed
from omegaconf import DictConfig, OmegaConf
from omegaconf.errors import OmegaConfBaseException
from tqdm import tqdm

from .errors import ArgumentError

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).resolve().parent / 'config'
DEFAULT_DIM_CAP = 4096


def load_config(config_name: str = 'defaults', **overrides: Any) -> DictConfig:
    """Compose the packaged config and apply explicit overrides (dotted keys allowed).

    Overrides whose value is None are ignored, so CLI flags left unset keep the defaults.
    """
    with initialize_config_dir(config_dir=str(CONFIG_DIR), version_base=None):
        cfg = compose(config_name=config_name)
    for key, value in overrides.items():
        if value is None:
            continue
        try:
            OmegaConf.update(cfg, key, value, merge=True)
        except OmegaConfBaseException as e:
            raise ArgumentError(f'unknown option {key!r}') from e
    return cfg


def setup_logging(level: str = 'INFO'):
    logging.basicConfig(
        stream=sys.stderr, level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def get_dim_cap() -> int:
    value = os.environ.get('QMIX_DIM_CAP')
    if value is None:
        return DEFAULT_DIM_CAP
    try:
        return int(value)
    except ValueError:
        raise ArgumentError(f'QMIX_DIM_CAP must be an integer, got {value!r}')


def parallel_map(fn: Callable, inputs: Iterable, n_jobs: int = 1, desc: Optional[str] = None,
                 progress: bool = False) -> List:
    """Apply fn to every input and return results in input order."""
    inputs = list(inputs)
    start = time.time()
    pbar = tqdm(inputs, desc=desc, disable=not progress, leave=False)
    if n_jobs == 1:
        results = [fn(inp) for inp in pbar]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(fn)(inp) for inp in pbar)
    logger.debug(f'{desc or fn.__name__}: {len(inputs)} items in {time.time() - start:.1f}s')
    return results


def make_output_dir(output_file: str) -> Path:
    output_file = Path(output_file)
    output_file.parent.mkdir(exist_ok=True, parents=True)
    return output_file


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for one block of trials, keyed by (seed, block)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


def format_number(x: float) -> float:
    """Round to 12 significant digits for reports."""
    return float(f'{x:.12g}')
