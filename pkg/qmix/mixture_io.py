"""
Mixture and POVM files.

Both are YAML maps::

    dim: 2
    labels: [up, plus]          # optional, mixtures only
    components:                 # 'elements' for a POVM
      - bloch: [0, 0, 1]        # qubits only
      - re: [[0.5, 0.5], [0.5, 0.5]]
        im: [[0, 0], [0, 0]]    # optional, defaults to zeros

All numbers are decimal; matrices are row-major grids.
"""
from pathlib import Path
from typing import Any, List

import numpy as np
import yaml
from omegaconf import OmegaConf

from .bayes import Povm
from .errors import ArgumentError, MixtureFileError
from .hermitian import as_density, as_hermitian
from .mixture import GeneralizedMixture, bloch_to_density, linear_mixture


def _read(path: str) -> dict:
    if not Path(path).is_file():
        raise MixtureFileError('no such file', path=str(path))
    try:
        data = OmegaConf.to_container(OmegaConf.load(path))
    except yaml.YAMLError as e:
        raise MixtureFileError(f'malformed YAML: {e}', path=str(path)) from e
    if not isinstance(data, dict):
        raise MixtureFileError('top level must be a map', path=str(path))
    return data


def _grid(value: Any, dim: int, path: str, field: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != dim:
        raise MixtureFileError(f'expected {dim} rows', path=path, field=field)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != dim:
            n = len(row) if isinstance(row, list) else 'no'
            raise MixtureFileError(f'row {i} has {n} entries, expected {dim}', path=path, field=field)
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise MixtureFileError(f'entry ({i}, {j}) is not a number: {x!r}', path=path, field=field)
    return np.array(value, dtype=float)


def _matrix(entry: Any, dim: int, path: str, field: str) -> np.ndarray:
    if not isinstance(entry, dict):
        raise MixtureFileError('expected a map with re/im or bloch', path=path, field=field)
    if 'bloch' in entry:
        if dim != 2:
            raise MixtureFileError('bloch vectors need dim 2', path=path, field=field)
        r = entry['bloch']
        if not isinstance(r, list) or len(r) != 3 or not all(isinstance(x, (int, float)) for x in r):
            raise MixtureFileError('bloch must be a list of 3 numbers', path=path, field=f'{field}.bloch')
        try:
            return bloch_to_density(r)
        except ArgumentError as e:
            raise MixtureFileError(str(e), path=path, field=f'{field}.bloch') from e
    if 're' not in entry:
        raise MixtureFileError('missing re', path=path, field=field)
    unknown = set(entry) - {'re', 'im'}
    if unknown:
        raise MixtureFileError(f'unknown keys {sorted(unknown)}', path=path, field=field)
    re = _grid(entry['re'], dim, path, f'{field}.re')
    im = _grid(entry['im'], dim, path, f'{field}.im') if 'im' in entry else np.zeros((dim, dim))
    try:
        return as_hermitian(re + 1j * im)
    except ArgumentError as e:
        raise MixtureFileError(str(e), path=path, field=field) from e


def _matrices(data: dict, key: str, path: str) -> List[np.ndarray]:
    dim = data.get('dim')
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise MixtureFileError(f'dim must be a positive integer, got {dim!r}', path=path, field='dim')
    entries = data.get(key)
    if not isinstance(entries, list) or len(entries) == 0:
        raise MixtureFileError(f'{key} must be a non-empty list', path=path, field=key)
    return [_matrix(e, dim, path, f'{key}[{i}]') for i, e in enumerate(entries)]


def load_mixture(path: str) -> GeneralizedMixture:
    path = str(path)
    data = _read(path)
    states = _matrices(data, 'components', path)
    labels = data.get('labels')
    if labels is not None and (not isinstance(labels, list) or len(labels) != len(states)):
        raise MixtureFileError(f'labels must list {len(states)} names', path=path, field='labels')
    for i, rho in enumerate(states):
        try:
            states[i] = as_density(rho)
        except ArgumentError as e:
            raise MixtureFileError(str(e), path=path, field=f'components[{i}]') from e
    return linear_mixture(states, labels=None if labels is None else [str(x) for x in labels])


def load_povm(path: str) -> Povm:
    path = str(path)
    elements = _matrices(_read(path), 'elements', path)
    try:
        return Povm(tuple(elements))
    except ArgumentError as e:
        raise MixtureFileError(str(e), path=path, field='elements') from e


def dump_mixture(mix: GeneralizedMixture, path: str):
    data = dict(dim=mix.dim, components=[dict(re=c.real.tolist(), im=c.imag.tolist()) for c in mix.components])
    if mix.labels is not None:
        data['labels'] = list(mix.labels)
    Path(path).write_text(OmegaConf.to_yaml(OmegaConf.create(data)))
