from abc import ABC, abstractmethod

from .sample_set import SampleSet


class Mitigator(ABC):
    """
    Turns a noisy measurement record into shots with the target electron numbers.
    """

    @abstractmethod
    def mitigate(self, samples: SampleSet, n_up: int, n_down: int) -> SampleSet:
        """
        :param samples: raw shots, possibly with wrong electron numbers
        :param n_up: target alpha electron count
        :param n_down: target beta electron count
        :returns: shots that all satisfy the targets
        """
        pass
