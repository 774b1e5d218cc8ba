import logging

from ..mitigator import Mitigator
from ..sample_set import SampleSet

logger = logging.getLogger(__name__)


def postselect(s: SampleSet, n_up: int, n_down: int) -> SampleSet:
    """Keep only the shots with n_up alpha and n_down beta electrons."""
    keys, counts = s.arrays()
    keep = s.in_sector(n_up, n_down)
    kept = SampleSet(dict(zip(keys[keep].tolist(), counts[keep].tolist())), s.n_qubits, s.origin)
    logger.debug('postselection kept %d of %d shots', kept.total_shots, s.total_shots)
    return kept


class PostSelection(Mitigator):
    def mitigate(self, samples: SampleSet, n_up: int, n_down: int) -> SampleSet:
        return postselect(samples, n_up, n_down)


class NoMitigation(Mitigator):
    """
    Passes the record through. Downstream consumers drop the wrong-number shots but keep
    them in the shot total.
    """

    def mitigate(self, samples: SampleSet, n_up: int, n_down: int) -> SampleSet:
        return samples
