"""
Locating Middlebury-style scenes on disk.

A *scene directory* holds one rectified pair, its ground truth and,
optionally, the three evaluation masks. File names are matched against the
usual Middlebury spellings (see ``_CANDIDATES``); a ``scene.json`` in the
directory may name the files explicitly and set ``d_max`` / ``gt_scale``.

An *illumination set* follows the Middlebury 2005/2006 layout::

    <root>/Illum{1,2,3}/Exp{0,1,2}/view1.png, view5.png
    <root>/disp1.png
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .errors import FormatError
from .imageio import DisparityMap, load_gt_disparity, load_image, load_mask

# name -> (d_max, gt_scale) for the four classic evaluation scenes
KNOWN_SCENES = {
    "tsukuba": (16, 16.0),
    "venus": (20, 8.0),
    "teddy": (60, 4.0),
    "cones": (60, 4.0),
}

REGIONS = ("nonocc", "all", "disc")

_CANDIDATES = {
    "left": ["left", "imL", "im2", "im0", "view1", "scene1.row3.col3"],
    "right": ["right", "imR", "im6", "im1", "view5", "scene1.row3.col4"],
    "gt": ["gt", "groundtruth", "disp2", "disp0", "disp1", "truedisp.row3.col3", "disp0GT"],
    "nonocc": ["nonocc"],
    "all": ["all"],
    "disc": ["disc"],
}
_EXTS = [".png", ".ppm", ".pgm", ".pfm"]


def _find(directory, stems) -> Optional[str]:
    for stem in stems:
        for ext in _EXTS:
            path = os.path.join(directory, stem + ext)
            if os.path.exists(path):
                return path
    return None


def region_from_mask(region: str, mask: np.ndarray) -> np.ndarray:
    """Pixels admitted by a Middlebury mask image.

    ``all`` admits every non-black pixel (occluded pixels are gray);
    ``nonocc`` and ``disc`` admit white pixels only.
    """
    if region == "all":
        return mask > 0
    return mask > 128


@dataclass
class Scene:
    name: str
    left: str
    right: str
    gt: str
    d_max: Optional[int] = None
    gt_scale: Optional[float] = None
    masks: Dict[str, str] = field(default_factory=dict)

    def load(self):
        """Return ``(left_rgb, right_rgb, gt, regions)``; ``regions`` maps name -> bool array."""
        left = load_image(self.left)
        right = load_image(self.right)
        gt = load_gt_disparity(self.gt, self.gt_scale or 1.0)
        regions = {name: region_from_mask(name, load_mask(path)) for name, path in self.masks.items()}
        return left, right, gt, regions


def find_scene(directory, d_max=None, gt_scale=None) -> Scene:
    """Build a :class:`Scene` from a directory; explicit arguments win over scene.json."""
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"scene directory not found: {directory}")
    name = os.path.basename(os.path.normpath(directory)).lower()
    meta = {}
    meta_path = os.path.join(directory, "scene.json")
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            try:
                meta = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{meta_path}: {exc}") from exc
    files = {}
    for role, stems in _CANDIDATES.items():
        if role in meta:
            files[role] = os.path.join(directory, meta[role])
        else:
            files[role] = _find(directory, stems)
    for role in ("left", "right", "gt"):
        if files[role] is None or not os.path.exists(files[role]):
            raise FileNotFoundError(f"{directory}: no {role} image found")
    known = KNOWN_SCENES.get(name, (None, None))
    return Scene(
        name=name,
        left=files["left"],
        right=files["right"],
        gt=files["gt"],
        d_max=d_max or meta.get("d_max") or known[0],
        gt_scale=gt_scale or meta.get("gt_scale") or known[1],
        masks={r: files[r] for r in REGIONS if files[r] is not None},
    )


@dataclass
class IlluminationSet:
    """Three left and three right views of one scene under varying conditions."""

    name: str
    lefts: List[str]
    rights: List[str]
    gt: str
    gt_scale: float = 1.0
    d_max: Optional[int] = None
    masks: Dict[str, str] = field(default_factory=dict)

    def load_gt(self) -> DisparityMap:
        return load_gt_disparity(self.gt, self.gt_scale)


def find_illumination_set(root, mode: str = "exposure", fixed: Optional[int] = None,
                          d_max=None, gt_scale=None) -> IlluminationSet:
    """Collect the 3 x 3 views of a Middlebury 2005/2006 scene.

    ``mode="exposure"`` varies Exp0..Exp2 under one illumination (default
    Illum2); ``mode="lighting"`` varies Illum1..Illum3 at one exposure
    (default Exp1).
    """
    if mode == "exposure":
        fixed = 2 if fixed is None else fixed
        dirs = [os.path.join(root, f"Illum{fixed}", f"Exp{e}") for e in range(3)]
    elif mode == "lighting":
        fixed = 1 if fixed is None else fixed
        dirs = [os.path.join(root, f"Illum{i}", f"Exp{fixed}") for i in (1, 2, 3)]
    else:
        raise ValueError("mode must be 'exposure' or 'lighting'")
    lefts, rights = [], []
    for d in dirs:
        lp = _find(d, ["view1", "left", "im0"])
        rp = _find(d, ["view5", "right", "im1"])
        if lp is None or rp is None:
            raise FileNotFoundError(f"{d}: missing view1/view5 images")
        lefts.append(lp)
        rights.append(rp)
    gt = _find(root, ["disp1", "gt", "groundtruth"])
    if gt is None:
        raise FileNotFoundError(f"{root}: missing disp1 ground truth")
    masks = {r: p for r in REGIONS if (p := _find(root, [r])) is not None}
    return IlluminationSet(os.path.basename(os.path.normpath(root)), lefts, rights, gt,
                           gt_scale or 1.0, d_max, masks)
