# Copyright 2024 The LatticeDefects Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""LatticeDefects utilities."""


import concurrent.futures
import os
import warnings

import numpy as np
import tensorflow as tf
from packaging.version import parse

from lattice_defects import config as config_module


def create_directory(path, remove_existing=False):
    # Create the directory if it doesn't exist.
    if not tf.io.gfile.exists(path):
        tf.io.gfile.makedirs(path)

    # If it does exist, and remove_existing is specified,
    # the directory will be removed and recreated.
    elif remove_existing:
        tf.io.gfile.rmtree(path)
        tf.io.gfile.makedirs(path)


def read_text(fname):
    with tf.io.gfile.GFile(str(fname), "r") as f:
        return f.read()


def write_text(fname, text):
    dirname = os.path.dirname(str(fname))
    if dirname:
        create_directory(dirname)
    with tf.io.gfile.GFile(str(fname), "w") as f:
        f.write(text)
    return str(fname)


def check_numpy_version():
    if parse(np.__version__) < parse("1.17.0"):
        warnings.warn(
            "The NumPy package version needs to be at least 1.17.0 \n"
            "for LatticeDefects to run. Currently, your NumPy version is \n"
            f"{np.__version__}. Please upgrade with \n"
            "`$ pip install --upgrade numpy`. \n"
            "You can use `pip freeze` to check afterwards that everything is "
            "ok.",
            ImportWarning,
        )


def to_list(values):
    if isinstance(values, list):
        return values
    if isinstance(values, tuple):
        return list(values)
    return [values]


def format_float(value):
    """17 significant digits in scientific notation."""
    return f"{float(value):.16e}"


def complex_to_pair(value):
    value = complex(value)
    return [value.real, value.imag]


def pair_to_complex(pair):
    if isinstance(pair, (int, float)) and not isinstance(pair, bool):
        return complex(pair)
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise ValueError(f"Expected a [re, im] pair, found: {pair}")
    re, im = pair
    return complex(float(re), float(im))


def map_in_threads(fn, items, threads=None):
    """Applies `fn` to every item, keeping the order of `items`.

    Args:
        fn: Callable taking one item.
        items: Iterable of items.
        threads: Optional integer, the maximum number of worker threads.
            Defaults to `config.default_threads()`.

    Returns:
        List of the results of `fn`, in the order of `items`.
    """
    items = list(items)
    threads = threads or config_module.default_threads()
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, items))
