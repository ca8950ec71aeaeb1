import numpy as np
import pytest

from banditsim import RngStream


class CountingGenerator:
    """Proxy around numpy's Generator that tallies values drawn per method.

    Used to cross-check policy draw reports against actual sampler traffic.
    """

    def __init__(self, generator):
        self._generator = generator
        self.counts = {"standard_normal": 0, "random": 0, "beta": 0}

    @staticmethod
    def _n(size):
        if size is None:
            return 1
        return int(np.prod(size))

    def standard_normal(self, size=None):
        self.counts["standard_normal"] += self._n(size)
        return self._generator.standard_normal(size) if size is not None \
            else self._generator.standard_normal()

    def random(self, size=None):
        self.counts["random"] += self._n(size)
        return self._generator.random(size) if size is not None else self._generator.random()

    def beta(self, a, b, size=None):
        if size is not None:
            self.counts["beta"] += self._n(size)
        else:
            self.counts["beta"] += int(np.broadcast(a, b).size)
        return self._generator.beta(a, b, size) if size is not None else self._generator.beta(a, b)

    def __getattr__(self, name):
        return getattr(self._generator, name)


@pytest.fixture
def counting_stream():
    def build(seed=0):
        stream = RngStream(seed)
        stream.generator = CountingGenerator(stream.generator)
        return stream

    return build
