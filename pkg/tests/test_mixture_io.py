import numpy as np
import pytest
from numpy.testing import assert_allclose

from qmix.errors import MixtureFileError
from qmix.hermitian import PAULI_Y
from qmix.mixture import identifiability, tetrahedron_mixture
from qmix.mixture_io import dump_mixture, load_mixture, load_povm


def write(tmp_path, text, name='m.yaml'):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadMixture:

    def test_bundled_files(self, data_dir):
        assert load_mixture(data_dir / 'orthogonal_qubits.yaml').param_count == 2
        assert load_mixture(data_dir / 'tetrahedron.yaml').param_count == 4
        assert not identifiability(load_mixture(data_dir / 'four_states.yaml')).identifiable

    def test_tetrahedron_file(self, data_dir):
        mix = load_mixture(data_dir / 'tetrahedron.yaml')
        for a, b in zip(mix.components, tetrahedron_mixture().components):
            assert_allclose(a, b, atol=1e-15)
        assert mix.labels == ('n1', 'n2', 'n3', 'n4')

    def test_re_im(self, tmp_path):
        path = write(tmp_path, 'dim: 2\ncomponents:\n'
                               '  - re: [[0.5, 0], [0, 0.5]]\n'
                               '    im: [[0, -0.5], [0.5, 0]]\n'
                               '  - bloch: [0, 0, 1]\n')
        mix = load_mixture(path)
        assert_allclose(mix.components[0], (np.eye(2) + PAULI_Y) / 2, atol=0)

    def test_dump(self, tmp_path):
        path = tmp_path / 'out.yaml'
        dump_mixture(tetrahedron_mixture(), path)
        mix = load_mixture(path)
        assert_allclose(mix.stacked, tetrahedron_mixture().stacked, atol=1e-15)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MixtureFileError, match='no such file'):
            load_mixture(tmp_path / 'absent.yaml')

    @pytest.mark.parametrize('text,field', [
        ('dim: 2\ncomponents: []\n', 'components'),
        ('dim: two\ncomponents:\n  - bloch: [0, 0, 1]\n', 'dim'),
        ('dim: 2\ncomponents:\n  - re: [[1, 0]]\n', 'components[0].re'),
        ('dim: 2\ncomponents:\n  - re: [[1, 0], [0, x]]\n', 'components[0].re'),
        ('dim: 2\ncomponents:\n  - re: [[1, 0], [0, 1]]\n', 'components[0]'),
        ('dim: 2\ncomponents:\n  - re: [[1, 1], [0, 0]]\n', 'components[0]'),
        ('dim: 3\ncomponents:\n  - bloch: [0, 0, 1]\n', 'components[0]'),
        ('dim: 2\ncomponents:\n  - bloch: [0, 0, 2]\n', 'components[0].bloch'),
        ('dim: 2\ncomponents:\n  - re: [[1, 0], [0, 0]]\n    foo: 1\n', 'components[0]'),
        ('dim: 2\nlabels: [a, b]\ncomponents:\n  - bloch: [0, 0, 1]\n', 'labels'),
    ])
    def test_invalid(self, tmp_path, text, field):
        with pytest.raises(MixtureFileError) as info:
            load_mixture(write(tmp_path, text))
        assert info.value.field == field

    def test_malformed_yaml(self, tmp_path):
        with pytest.raises(MixtureFileError):
            load_mixture(write(tmp_path, 'dim: [2\n'))

    def test_top_level_list(self, tmp_path):
        with pytest.raises(MixtureFileError, match='top level'):
            load_mixture(write(tmp_path, '- 1\n- 2\n'))


class TestLoadPovm:

    @pytest.mark.parametrize('name,outcomes', [('z_povm.yaml', 2), ('y_povm.yaml', 2), ('trivial_povm.yaml', 1)])
    def test_bundled_files(self, data_dir, name, outcomes):
        povm = load_povm(data_dir / name)
        assert povm.n_outcomes == outcomes
        assert_allclose(sum(povm.elements), np.eye(2), atol=1e-12)

    def test_incomplete(self, tmp_path):
        path = write(tmp_path, 'dim: 2\nelements:\n  - re: [[1, 0], [0, 0]]\n')
        with pytest.raises(MixtureFileError) as info:
            load_povm(path)
        assert info.value.field == 'elements'
