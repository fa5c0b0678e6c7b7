"""
Streams de números aleatórios independentes e reprodutíveis

Cada stream é derivado do seed mestre pelo ``SeedSequence`` do numpy com
``spawn_key = (código do componente, índice do módulo)``. O código do
componente vem de ``config.settings.COMPONENT_IDS``. O SeedSequence mistura
entropia e spawn_key com o hash documentado do numpy, portanto a mesma tripla
(mestre, componente, módulo) sempre gera o mesmo stream e triplas diferentes
geram streams estatisticamente independentes.
"""
from typing import Any, Dict

import numpy as np

from config.settings import COMPONENT_IDS

MASK_64 = (1 << 64) - 1


class SeedStreams:
    def __init__(self, master_seed: int):
        if master_seed < 0:
            raise ValueError("seed mestre deve ser não negativo")
        self.master_seed = int(master_seed) & MASK_64

    def sequence(self, component: str, module: int = 0) -> np.random.SeedSequence:
        if component not in COMPONENT_IDS:
            raise KeyError(f"Componente desconhecido: {component}")
        return np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=(COMPONENT_IDS[component], int(module)),
        )

    def stream(self, component: str, module: int = 0) -> np.random.Generator:
        """Generator PCG64 para (componente, módulo)"""
        return np.random.Generator(np.random.PCG64(self.sequence(component, module)))

    def int_seed(self, component: str, module: int = 0) -> int:
        """Semente inteira de 64 bits para APIs que pedem um int"""
        return int(self.sequence(component, module).generate_state(1, np.uint64)[0])


def seed_streams(master_seed: int) -> SeedStreams:
    return SeedStreams(master_seed)


def generator_state(rng: np.random.Generator) -> Dict[str, Any]:
    """Estado serializável (JSON) de um Generator"""
    state = rng.bit_generator.state
    return {
        "bit_generator": state["bit_generator"],
        "state": {k: int(v) for k, v in state["state"].items()},
        "has_uint32": int(state["has_uint32"]),
        "uinteger": int(state["uinteger"]),
    }


def restore_generator(state: Dict[str, Any]) -> np.random.Generator:
    if state["bit_generator"] != "PCG64":
        raise ValueError(f"Bit generator não suportado: {state['bit_generator']}")
    bit_generator = np.random.PCG64()
    bit_generator.state = state
    return np.random.Generator(bit_generator)
