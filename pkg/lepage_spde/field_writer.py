import logging
from abc import ABC, abstractmethod
import cv2
import numpy as np
from numpy.typing import NDArray, ArrayLike

log = logging.getLogger(__name__)

def diverging_lut() -> NDArray:
    '''256x1 BGR lookup table going blue -> white -> red'''
    ramp = np.linspace(-1.0, 1.0, 256)
    lut = np.empty((256, 1, 3), dtype=np.uint8)
    # below the centre: fade blue into white, above: white into red
    cold = np.clip(1 + ramp, 0, 1)
    hot = np.clip(1 - ramp, 0, 1)
    lut[:, 0, 0] = np.round(255 * np.where(ramp < 0, 1.0, hot))   # B
    lut[:, 0, 1] = np.round(255 * np.minimum(cold, hot))           # G
    lut[:, 0, 2] = np.round(255 * np.where(ramp < 0, cold, 1.0))  # R
    return lut

class FieldWriter(ABC):
    '''writes a field u sampled on a (t, x) grid'''

    @abstractmethod
    def write_field(self, ts: ArrayLike, xs: ArrayLike, u: NDArray) -> None:
        pass

class CSV_FieldWriter(FieldWriter):
    '''one row per node, t outer, 17 significant digits'''

    def __init__(self, filename: str = 'field.csv') -> None:
        self.filename = filename

    def write_field(self, ts: ArrayLike, xs: ArrayLike, u: NDArray) -> None:
        ts = np.asarray(ts, dtype=np.float64)
        xs = np.asarray(xs, dtype=np.float64)
        tt, xx = np.meshgrid(ts, xs, indexing='ij')
        table = np.column_stack((tt.ravel(), xx.ravel(), np.asarray(u, dtype=np.float64).ravel()))
        np.savetxt(self.filename, table, fmt='%.17g', delimiter=',', header='t,x,u', comments='')
        log.info("wrote %d nodes to %s", table.shape[0], self.filename)

class Heatmap_FieldWriter(FieldWriter):
    '''
    static heatmap, x along the horizontal axis and t increasing upwards.
    Colors are centred at u = 1 with a symmetric range taken from the 99th
    percentile of |u - 1| so a few spikes do not wash the picture out.
    '''

    def __init__(self, filename: str = 'field.png', pixels_per_node: int = 4) -> None:
        self.filename = filename
        self.pixels_per_node = pixels_per_node
        self.lut = diverging_lut()

    def to_image(self, u: NDArray) -> NDArray:
        u = np.asarray(u, dtype=np.float64)
        deviation = u - 1.0
        finite = np.isfinite(deviation)
        scale = np.percentile(np.abs(deviation[finite]), 99) if np.any(finite) else 0.0
        if scale == 0:
            scale = 1.0
        level = np.clip(np.nan_to_num(deviation / scale), -1, 1)
        gray = np.round(127.5 * (level + 1)).astype(np.uint8)
        image = cv2.applyColorMap(np.ascontiguousarray(np.flipud(gray)), self.lut)
        height, width = gray.shape
        return cv2.resize(
            image,
            (width * self.pixels_per_node, height * self.pixels_per_node),
            interpolation=cv2.INTER_NEAREST
        )

    def write_field(self, ts: ArrayLike, xs: ArrayLike, u: NDArray) -> None:
        if not cv2.imwrite(self.filename, self.to_image(u)):
            raise IOError(f"could not write {self.filename}")
        log.info("wrote heatmap to %s", self.filename)
