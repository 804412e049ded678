"""Bounding-box relative S x S grid over a scene's x-y plane."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BBox = tuple[float, float, float, float]


@dataclass(frozen=True, order=True)
class CellIndex:
    """A grid cell, ``row`` along y and ``col`` along x."""

    row: int
    col: int

    def as_list(self) -> list[int]:
        return [self.row, self.col]


def _axis_cells(values: np.ndarray, low: float, high: float, size: int) -> np.ndarray:
    extent = high - low
    if extent <= 0.0:
        return np.zeros(values.shape, dtype=np.int64)
    step = extent / size
    cells = np.floor((values - low) / step).astype(np.int64)
    return np.clip(cells, 0, size - 1)


def cells_of_points(xy: np.ndarray, bbox: BBox, grid_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``cell_of_point``: returns ``(rows, cols)`` integer arrays.

    Cells are lower-closed; points on the max boundary clamp into the last
    cell and a zero-extent axis maps everything to 0.
    """
    if grid_size < 1:
        raise ValueError(f"grid_size must be >= 1, got {grid_size}")
    x_min, x_max, y_min, y_max = bbox
    if x_max < x_min or y_max < y_min:
        raise ValueError(f"invalid bounding box {bbox}")
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    cols = _axis_cells(xy[:, 0], x_min, x_max, grid_size)
    rows = _axis_cells(xy[:, 1], y_min, y_max, grid_size)
    return rows, cols


def cell_of_point(point: tuple[float, float], bbox: BBox, grid_size: int) -> CellIndex:
    rows, cols = cells_of_points(np.asarray([point[:2]]), bbox, grid_size)
    return CellIndex(int(rows[0]), int(cols[0]))


def flat_cells(rows: np.ndarray, cols: np.ndarray, grid_size: int) -> np.ndarray:
    return rows * grid_size + cols


__all__ = ["BBox", "CellIndex", "cell_of_point", "cells_of_points", "flat_cells"]
