# core/rng.py
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import ndtri

_HALF_ULP = 2.0**-54


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by (master_seed, stream, path).

    The draw at counter position ``i`` depends only on the key and ``i``, so
    a block of coefficients can be regenerated from any offset and the
    result does not depend on how samples were spread over workers.
    """

    master_seed: int
    stream: int = 0
    path: Tuple[int, ...] = ()

    def _bit_generator(self) -> np.random.Philox:
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed) & ((1 << 64) - 1),
            spawn_key=(int(self.stream), *self.path),
        )
        key = seq.generate_state(2, dtype=np.uint64)
        return np.random.Philox(key=key)

    def uniforms(self, start: int, count: int) -> np.ndarray:
        """Open-interval uniforms at counter positions start..start+count-1."""
        bit_generator = self._bit_generator()
        # one Philox counter step yields four 64-bit outputs
        block, offset = divmod(int(start), 4)
        if block:
            bit_generator.advance(block)
        raw = np.random.Generator(bit_generator).random(offset + int(count))
        return raw[offset:] + _HALF_ULP

    def normals(self, start: int, count: int) -> np.ndarray:
        return ndtri(self.uniforms(start, count))

    def child(self, index: int) -> "RngStream":
        return RngStream(self.master_seed, self.stream, (*self.path, int(index)))

    def sample(self, index: int) -> "RngStream":
        """Stream of sample ``index`` under the same master seed and path."""
        return RngStream(self.master_seed, int(index), self.path)

    @property
    def metadata(self) -> dict:
        return {"seed": self.master_seed, "stream": self.stream, "path": list(self.path)}
