"""
Exact entry and return survival for finite Markov shifts

The chain is run on the product of its alphabet with the word's occurrence
automaton. Dropping every transition that completes the word leaves a
substochastic no-match operator; the mass surviving s applications of it is
P(tau_B > s) from the matching initial vector.
"""

import logging

import numpy as np
from scipy import sparse

from models.systems import FiniteMarkovSystem
from utils.errors import InvalidSpec, ZeroMeasure
from utils.targets import MatcherTable

logger = logging.getLogger(__name__)


class ExactChainModel:
    """Product chain (symbol, automaton node) with word completions removed

    Product state (i, k) has index (i - 1) * |word| + k; node |word| is never
    occupied because completing transitions are dropped.
    """

    def __init__(self, matrix, stationary, word):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.stationary = np.asarray(stationary, dtype=np.float64)
        self.word = tuple(int(s) for s in word)
        self.automaton = MatcherTable(self.word)
        self.n_symbols = len(self.stationary)
        self.length = len(self.word)
        if max(self.word) > self.n_symbols:
            raise InvalidSpec('word', f'symbol {max(self.word)} outside the alphabet 1..{self.n_symbols}')
        self.mu = self._word_measure()
        self.no_match = self._build_operator()
        # Row vectors propagate through the transpose
        self._forward = self.no_match.T.tocsr()

    @classmethod
    def from_system(cls, system, word):
        if not isinstance(system, FiniteMarkovSystem):
            raise InvalidSpec('variant', f'exact survival needs a finite alphabet, got {system.name}')
        return cls(system.matrix, system.stationary, word)

    def _word_measure(self):
        w = self.word
        mass = self.stationary[w[0] - 1]
        for i, j in zip(w, w[1:]):
            mass *= self.matrix[i - 1, j - 1]
        if not mass > 0:
            raise ZeroMeasure(f"word {w} has zero measure")
        return float(mass)

    def index(self, symbol, node):
        return (symbol - 1) * self.length + node

    @property
    def size(self):
        return self.n_symbols * self.length

    def _build_operator(self):
        rows, cols, probs = [], [], []
        table = self.automaton
        for i in range(1, self.n_symbols + 1):
            for k in range(self.length):
                for j in range(1, self.n_symbols + 1):
                    p = self.matrix[i - 1, j - 1]
                    if p == 0.0:
                        continue
                    nxt = int(table.table[k, j if j <= table.top else 0])
                    if nxt == self.length:
                        continue
                    rows.append(self.index(i, k))
                    cols.append(self.index(j, nxt))
                    probs.append(p)
        return sparse.csr_matrix((probs, (rows, cols)), shape=(self.size, self.size))

    def row_sums(self):
        return np.asarray(self.no_match.sum(axis=1)).ravel()

    def entry_vector(self):
        """Stationary symbol at position 0, nothing fed yet"""
        v = np.zeros(self.size)
        for i in range(1, self.n_symbols + 1):
            v[self.index(i, 0)] = self.stationary[i - 1]
        return v

    def return_vector(self):
        """Word pinned at positions 0..|word|-1, automaton fed from position 1"""
        node, _ = self.automaton.prefeed(self.word[1:])
        v = np.zeros(self.size)
        v[self.index(self.word[-1], node)] = 1.0
        return v

    def propagate(self, v, steps):
        masses = np.empty(steps + 1)
        masses[0] = v.sum()
        for s in range(1, steps + 1):
            v = self._forward @ v
            masses[s] = v.sum()
        return v, masses


def exact_survival(model, horizon_steps, mode='entry'):
    """P(tau_B > s) for s = 0..horizon_steps from the stationary or B-conditioned start"""
    horizon_steps = int(horizon_steps)
    if horizon_steps < 0:
        raise InvalidSpec('horizon_steps', 'must be >= 0')
    if mode == 'entry':
        # A start at position s is found once the word ends at s + |word| - 1
        v, _ = model.propagate(model.entry_vector(), model.length - 1)
        _, masses = model.propagate(v, horizon_steps)
    elif mode == 'return':
        _, masses = model.propagate(model.return_vector(), horizon_steps)
    else:
        raise InvalidSpec('mode', f'exact survival supports entry and return, got {mode!r}')
    masses[0] = 1.0
    return np.minimum(masses, 1.0)


def max_jump(sequence):
    """Largest one-step drop P(tau > s) - P(tau > s+1)"""
    sequence = np.asarray(sequence, dtype=np.float64)
    if len(sequence) < 2:
        return 0.0
    return float(max(0.0, np.max(sequence[:-1] - sequence[1:])))
