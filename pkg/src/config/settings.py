"""
Configurações centralizadas do projeto
"""

# Valores padrão do experimento
DEFAULT_EXPERIMENT = {
    "frequency": 28e9,  # Hz
    "seed": 0,
    "output_dir": "data/output",
    "bits": 4,
    "array": {
        "rows": 60,
        "cols": 60,
        "module_rows": 10,
        "module_cols": 10,
        "spacing_factor": 0.5,  # pitch em comprimentos de onda
        "origin": [1.0, 0.0, 1.5],
        "normal": [0.0, 1.0, 0.0],
    },
    "room": {
        "enabled": True,
        "dimensions": [4.0, 4.0, 3.0],
        "reflection": [0.1, 0.1, 0.1, 0.1, 0.1, 0.1],
        "phase_shift": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        "random_phase": False,
    },
    "channel": {
        "path_loss_exponent": 2.7,
        "tx_gain": 1.0,
        "rx_gain": 1.0,
        "direct_phase_offset": 0.0,
        "phase_error_std": 0.0,
    },
    "signal": {
        "signal_power": 1.0,  # W
        "noise_power": 0.0,  # W
    },
    "ue": {
        "position": None,  # None -> centro da abertura + distance * normal
        "distance": 1.4,
    },
    "zone": {
        "enforce": True,
        "wpt_override": False,
    },
    "agent": {
        "variant": "td3",
        "gamma": 0.99,
        "tau": 0.005,
        "batch_size": 64,
        "buffer_capacity": 50000,
        "actor_period": 1,
        "target_period": 3,
        "explore_var": 0.5,
        "explore_decay": 1e-5,
        "explore_min": 1e-3,
        "target_var": 0.1,
        "target_decay": 1e-4,
        "knn_k": 8,
        "knn_wrap": False,
        "actor_lr": 1e-3,
        "critic_lr": 2e-3,
    },
    "schedule": {
        "max_steps": 100000,
        "window": 5000,
        "threshold": 0.01,
        "parallel": True,
        "workers": 4,
        "snapshot_steps": [],
    },
    "map": {
        "half_extent": 0.3,  # m
        "points": 61,  # por eixo, ímpar para o DFP cair num nó
        "eta": 0.8,
        "profile_start": 0.5,  # m ao longo da normal
        "profile_stop": 4.0,
        "profile_points": 200,
        "plots": True,
    },
    "compare": {
        "modules": [0],
    },
}

# Configurações de logging
LOGGING_CONFIG = {
    "level": "INFO",
    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    "date_format": "%Y-%m-%d %H:%M:%S"
}

# Layout dos artefatos dentro do diretório de saída
OUTPUT_LAYOUT = {
    "curves": "curves",
    "maps": "maps",
    "summary": "summary.json",
    "manifest": "manifest.json",
    "metrics": "metrics.json",
    "beam_vector": "beam_vector.json",
    "channel": "channel.csv",
    "config": "config.json",
    "log": "run.log",
}

# Códigos de componente usados na derivação das sementes
COMPONENT_IDS = {
    "init": 0,
    "explore": 1,
    "knn": 2,
    "minibatch": 3,
    "room": 4,
    "hardware": 5,
    "check": 6,
    "target": 7,
}

CODE_VERSION = "0.1.0"
