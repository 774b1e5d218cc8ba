from abc import ABC, abstractmethod

from .sample_set import SampleSet


class NoiseModel(ABC):
    """
    Classical readout noise applied to measured bitstrings.
    """

    @abstractmethod
    def apply(self, samples: SampleSet, seed=None) -> SampleSet:
        """
        Corrupt every shot of ``samples`` independently.

        :param samples: the noiseless measurement record
        :param seed: seed or generator for the corruption
        :returns: a SampleSet with origin NOISY
        """
        pass

    @abstractmethod
    def correct_number_probability(self, n_orb: int, n_up: int, n_down: int) -> float:
        """
        Probability that a shot of a sector-valid bitstring still has n_up alpha and n_down beta
        electrons after corruption.
        """
        pass

    @abstractmethod
    def error_free_fraction(self, n_qubits: int) -> float:
        """Probability that a shot passes through uncorrupted."""
        pass
