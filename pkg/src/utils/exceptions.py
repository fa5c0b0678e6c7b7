"""
Exceções customizadas do projeto
"""

class FocusBaseException(Exception):
    """Exceção base do projeto"""
    pass

class ConfigurationError(FocusBaseException):
    """Erro na configuração do experimento"""
    pass

class ConfigParseError(ConfigurationError):
    """Arquivo de configuração ilegível"""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (linha {line}, coluna {column})")
        self.line = line
        self.column = column

class ConfigValidationError(ConfigurationError):
    """Campo de configuração inválido"""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field

class GeometryError(FocusBaseException):
    """Erro de geometria do arranjo"""
    pass

class ZoneError(GeometryError):
    """Ponto fora da zona de Fresnel exigida"""
    pass

class ChannelError(FocusBaseException):
    """Erro no modelo de canal"""
    pass

class BeamformingError(FocusBaseException):
    """Erro na avaliação de vetores de beamforming"""
    pass

class NeighborSearchError(FocusBaseException):
    """Erro na busca de vizinhos quantizados"""
    pass

class NumericalError(FocusBaseException):
    """Valores não finitos durante o treinamento"""
    pass

class AlignmentError(FocusBaseException):
    """Erro no alinhamento de fase entre módulos"""
    pass

class ExperimentError(FocusBaseException):
    """Erro durante a execução de um experimento"""
    pass

class ValidationError(FocusBaseException):
    """Falha em uma verificação de invariante"""
    pass
