# Copyright 2026 The vin Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Cautery margin labeling for whole-slide images."""

from ._core import *  # noqa: F401,F403
from ._core import VinError

__all__ = [
    "VinError", "derive_seed", "axis_origins", "plan_regions", "stable_ce", "sigmoid",
    "vote_region", "read_cache", "load_model", "predict_proba", "synth", "tile",
    "rasterize", "extract", "train", "infer", "vote", "stitch", "render", "evaluate",
]
