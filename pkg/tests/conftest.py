import numpy as np
import pytest

from hsikelm import datacube, pipeline


class ScriptedRng:
    """Stand-in generator returning pre-scripted draws, for hand-case tests.

    ``uniform`` pops raw scripted floats regardless of the requested range;
    ``standard_normal``/``integers`` pop scalars or arrays; ``permutation``
    returns the scripted order.
    """

    def __init__(self, uniforms=(), normals=(), int_rows=(), perm=None):
        self.uniforms = list(uniforms)
        self.normals = list(normals)
        self.int_rows = list(int_rows)
        self.perm = perm

    def uniform(self, *args, **kwargs):
        return self.uniforms.pop(0)

    def standard_normal(self, size=None):
        value = self.normals.pop(0)
        if size is None:
            return value
        return np.broadcast_to(np.asarray(value, dtype=float), (size,)).copy()

    def integers(self, low, high, size=None):
        return np.asarray(self.int_rows.pop(0))

    def permutation(self, n):
        return np.asarray(self.perm)


@pytest.fixture
def scripted_rng():
    return ScriptedRng


@pytest.fixture
def small_scene(tmp_path):
    """A 32x32x20 3-class striped cube saved in the canonical format."""
    cube, labels = pipeline.make_synthetic_cube(32, 32, 20, 3, 0.1, seed=0)
    cube_path = tmp_path / "cube.f32"
    label_path = tmp_path / "labels.u16"
    datacube.save_cube(cube, cube_path)
    datacube.save_labels(labels, label_path)
    return {"cube": cube, "labels": labels, "cube_path": cube_path, "label_path": label_path}


def fast_config_dict(scene, out_dir, **extra):
    """Small-budget pipeline config for unit tests."""
    base = {
        "cube_path": str(scene["cube_path"]),
        "label_path": str(scene["label_path"]),
        "num_classes": scene["labels"].num_classes,
        "train_fraction": 0.1,
        "seed": 0,
        "folds": 2,
        "output_dir": str(out_dir),
        "mstv": {"k": 5, "n_components": 5, "landmark_count": 256},
        "ssa": {"pop_size": 6, "max_iter": 3},
    }
    base.update(extra)
    return base
