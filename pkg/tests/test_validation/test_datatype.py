import os
import sys
from typing import Annotated

import h5py
import numpy as np
import pytest
from pydantic import ValidationError, validate_call

dir_path = os.path.dirname(os.path.realpath(__file__))
sys.path.append(os.path.realpath(f"{dir_path}/../.."))

from voxquery.validation import (BoolArray, FloatArray, H5File, IntArray,
                                 NumpyArrayAnnotation)


@validate_call()
def describe(labels: IntArray, depth: FloatArray, valid: BoolArray):
    return labels.dtype, depth.dtype, valid.dtype


class TestNumpyArrayAnnotation:
    # Untyped annotations accept any array but nothing else
    def test_untyped(self):
        @validate_call()
        def func(arr: Annotated[np.ndarray, NumpyArrayAnnotation]):
            return arr

        func(np.array(["a"]))
        with pytest.raises(ValidationError):
            func([1, 2])

    # Aliases check the dtype kind
    def test_aliases(self):
        describe(np.zeros(3, dtype=np.uint8), np.zeros(3), np.zeros(3, dtype=bool))
        describe(np.zeros(3, dtype=np.int64), np.zeros(3, dtype=np.float32), np.ones(3, dtype=bool))
        with pytest.raises(ValidationError):
            describe(np.zeros(3), np.zeros(3), np.zeros(3, dtype=bool))
        with pytest.raises(ValidationError):
            describe(np.zeros(3, dtype=np.uint8), np.zeros(3, dtype=np.int32), np.zeros(3, dtype=bool))

    # Unions accept any of their members
    def test_union(self):
        @validate_call()
        def func(arr: Annotated[np.ndarray, NumpyArrayAnnotation[np.bool_ | np.integer]]):
            return arr

        func(np.array([True]))
        func(np.array([3]))
        with pytest.raises(ValidationError):
            func(np.array([0.5]))


class TestH5File:
    # Open files are accepted, paths are not
    def test_h5(self, tmp_path):
        @validate_call()
        def func(hf: H5File):
            return hf.filename

        with h5py.File(tmp_path / "a.h5", "w") as f:
            assert func(f).endswith("a.h5")
        with pytest.raises(ValidationError):
            func(str(tmp_path / "a.h5"))
