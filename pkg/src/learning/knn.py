"""
Vizinhos quantizados mais próximos de um vetor de beamforming

Os vizinhos são emitidos por nível L: no nível L exatamente L coordenadas
mudam, cada uma por um passo de índice (+1 ou -1). Passos que ultrapassam o
primeiro ou o último nível do codebook são descartados (sem volta circular),
salvo com ``wrap=True``. Dentro de um nível a ordem é uniforme sobre os membros
do nível.

A ordem por níveis aproxima, mas nem sempre coincide com, a ordem euclidiana
exata no círculo: com codebooks grosseiros uma coordenada movida dois passos
pode ficar mais perto que duas coordenadas movidas um passo.
"""
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from beamforming.codebook import BeamVector, PhaseCodebook
from utils.exceptions import NeighborSearchError
from utils.logger import setup_logger

logger = setup_logger(__name__)

BRUTEFORCE_LIMIT = 3 ** 8

RngLike = Union[np.random.Generator, int, None]


@dataclass
class NeighborList:
    vectors: List[BeamVector] = field(default_factory=list)
    levels: List[int] = field(default_factory=list)
    requested: int = 0
    exhausted: bool = False
    operations: int = 0

    def __len__(self) -> int:
        return len(self.vectors)

    def by_level(self) -> Dict[int, Set[Tuple[int, ...]]]:
        grouped: Dict[int, Set[Tuple[int, ...]]] = {}
        for vector, level in zip(self.vectors, self.levels):
            grouped.setdefault(level, set()).add(tuple(int(i) for i in vector.indices))
        return grouped

    def to_dict(self) -> Dict:
        return {
            "requested": self.requested,
            "returned": len(self.vectors),
            "exhausted": self.exhausted,
            "operations": self.operations,
            "neighbors": [
                {"level": level, "indices": [int(i) for i in vector.indices]}
                for vector, level in zip(self.vectors, self.levels)
            ],
        }


def _moves(indices: np.ndarray, size: int, wrap: bool) -> List[Tuple[int, ...]]:
    """Novos índices alcançáveis com um passo em cada coordenada"""
    moves = []
    for value in indices:
        value = int(value)
        if wrap:
            options = {(value + 1) % size, (value - 1) % size} - {value}
            moves.append(tuple(sorted(options)))
        else:
            options = []
            if value + 1 < size:
                options.append(value + 1)
            if value > 0:
                options.append(value - 1)
            moves.append(tuple(options))
    return moves


def _suffix_table(counts: Sequence[int], level: int) -> List[List[int]]:
    """table[i][l] = soma dos produtos de counts[i:] tomados l a l"""
    n = len(counts)
    table = [[0] * (level + 1) for _ in range(n + 1)]
    table[n][0] = 1
    for i in range(n - 1, -1, -1):
        table[i][0] = 1
        for l in range(1, level + 1):
            table[i][l] = table[i + 1][l] + counts[i] * table[i + 1][l - 1]
    return table


def _as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def knn(
    w_m: BeamVector,
    k: int,
    codebook: Optional[PhaseCodebook] = None,
    rng: RngLike = None,
    wrap: bool = False,
) -> NeighborList:
    if k < 1:
        raise NeighborSearchError(f"k deve ser >= 1, recebido {k}")
    if len(w_m) < 1:
        raise NeighborSearchError("vetor vazio")
    codebook = codebook or w_m.codebook
    generator = _as_generator(rng)

    base = w_m.indices
    n = base.size
    moves = _moves(base, codebook.size, wrap)
    counts = [len(m) for m in moves]
    result = NeighborList(requested=k)

    def emit(changes: Sequence[Tuple[int, int]], level: int) -> None:
        indices = base.copy()
        for coord, value in changes:
            indices[coord] = value
        result.vectors.append(w_m.with_indices(indices))
        result.levels.append(level)
        result.operations += n + level

    for level in range(1, n + 1):
        need = k - len(result.vectors)
        if need <= 0:
            break
        table = _suffix_table(counts, level)
        result.operations += n * level
        level_size = table[0][level]
        if level_size == 0:
            continue

        if level_size <= 2 * need:
            # nível pequeno: enumera tudo e embaralha
            members = []
            active = [i for i in range(n) if counts[i]]
            for coords in combinations(active, level):
                for values in product(*(moves[c] for c in coords)):
                    members.append(tuple(zip(coords, values)))
            result.operations += len(members) * level
            for position in generator.permutation(len(members))[:need]:
                emit(members[position], level)
            continue

        # nível grande: sorteio uniforme sobre os membros, rejeitando repetidos
        seen: Set[Tuple[Tuple[int, int], ...]] = set()
        while len(seen) < need:
            remaining = level
            changes = []
            for coord in range(n):
                if remaining == 0:
                    break
                weight = counts[coord] * table[coord + 1][remaining - 1]
                if weight and generator.random() < weight / table[coord][remaining]:
                    option = moves[coord][int(generator.integers(counts[coord]))]
                    changes.append((coord, option))
                    remaining -= 1
            result.operations += n
            key = tuple(changes)
            if key in seen:
                continue
            seen.add(key)
            emit(changes, level)

    if len(result.vectors) < k:
        result.exhausted = True
        logger.debug(f"knn esgotado: {len(result.vectors)} de {k} vizinhos disponíveis")
    return result


def knn_bruteforce(
    w_m: BeamVector,
    k: int,
    codebook: Optional[PhaseCodebook] = None,
    wrap: bool = False,
) -> NeighborList:
    """Enumeração completa dos deslocamentos em {-1, 0, +1} por coordenada"""
    codebook = codebook or w_m.codebook
    n = len(w_m)
    if 3 ** n > BRUTEFORCE_LIMIT:
        raise NeighborSearchError(f"instância grande demais para força bruta (N'={n})")

    base = tuple(int(i) for i in w_m.indices)
    found: Dict[Tuple[int, ...], int] = {}
    for deltas in product((-1, 0, 1), repeat=n):
        candidate = []
        valid = True
        for value, delta in zip(base, deltas):
            new = value + delta
            if wrap:
                new %= codebook.size
            elif not 0 <= new < codebook.size:
                valid = False
                break
            candidate.append(new)
        if not valid:
            continue
        candidate = tuple(candidate)
        changed = sum(a != b for a, b in zip(candidate, base))
        if changed:
            found.setdefault(candidate, changed)

    ordered = sorted(found.items(), key=lambda item: (item[1], item[0]))[:k]
    return NeighborList(
        vectors=[w_m.with_indices(np.asarray(c)) for c, _ in ordered],
        levels=[level for _, level in ordered],
        requested=k,
        exhausted=len(ordered) < k,
        operations=len(found) * n,
    )


def best_of_knn(
    candidates: Sequence[BeamVector],
    q_scorer: Callable[[np.ndarray], np.ndarray],
) -> BeamVector:
    """Candidato de maior Q; empates ficam com o primeiro da lista"""
    if not candidates:
        raise NeighborSearchError("lista de candidatos vazia")
    scores = np.asarray(q_scorer(np.stack([c.indices for c in candidates])), dtype=float).reshape(-1)
    if scores.size != len(candidates):
        raise NeighborSearchError("scorer retornou quantidade errada de valores")
    return candidates[int(np.argmax(scores))]
