"""
EVOLUCION: MOTOR DEL ALGORITMO GENÉTICO
=======================================

Motor común de las dos etapas (GA1: gramática y similitud; GA2: función
compuesta con los modelos de oyentes). Solo cambia el evaluador.

FUNCIONALIDADES:
- Población inicial muestreada de la distribución de notas del corpus
- Cruce por la mitad temporal, igual en todos los canales
- Mutación gen a gen: una nota se apaga y un silencio se enciende con una
  altura muestreada del corpus
- Bucle con selección de los dos mejores y elitismo
- Registro por iteración exportable a CSV
- Comparación de tiempos de GA1 y GA2 según la longitud del cromosoma

CÓMO FUNCIONA:
1. En cada iteración se evalúan todos los individuos y se eligen best1 y
   best2 (los empates los gana el índice menor)
2. best1 y best2 pasan intactos a la siguiente generación
3. El resto son hijos: con probabilidad tasa_cruce, cruce(best1, best2); si
   no, copia de uno de los dos élite elegido al azar. Todo hijo se muta
4. Toda la aleatoriedad sale de un único generador con semilla, consumido en
   orden fijo, así que la ejecución es reproducible bit a bit
"""

import logging
import time
from dataclasses import dataclass, field, replace

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns
from tqdm import tqdm

from config import PARAMETROS_GA
from errores import ConfiguracionInvalida, FormasIncompatibles
from indice_corpus import SILENCIO, muestrear_nota, muestrear_tono
from matriz_piano import Cromosoma

logger = logging.getLogger(__name__)

MODOS = ("GA1", "GA2")
INTENTOS_REMUESTREO = 10
COLUMNAS_REGISTRO = ["iteration", "best_fitness", "mean_fitness", "cost", "score", "elapsed_ms"]


# ============================================================================
# 1. CONFIGURACIÓN Y REGISTRO
# ============================================================================

@dataclass(frozen=True)
class ConfigGA:
    """
    Parámetros del algoritmo genético.

    Atributos:
    ----------
    iteraciones : int
    poblacion : int
        Al menos 2 (los dos élite)
    tasa_cruce, tasa_mutacion : float
        En [0, 1]
    canales : int
        Notas simultáneas posibles
    pasos : int
        Longitud del cromosoma en ticks
    semilla : int
    modo : str
        'GA1' o 'GA2'
    """

    iteraciones: int = 3600
    poblacion: int = 15
    tasa_cruce: float = 0.5
    tasa_mutacion: float = 0.1
    canales: int = 2
    pasos: int = 64
    semilla: int = 0
    modo: str = "GA1"

    def __post_init__(self):
        if self.iteraciones < 1:
            raise ConfiguracionInvalida(f"iteraciones debe ser >= 1: {self.iteraciones}")
        if self.poblacion < 2:
            raise ConfiguracionInvalida(f"poblacion debe ser >= 2: {self.poblacion}")
        for nombre in ("tasa_cruce", "tasa_mutacion"):
            valor = getattr(self, nombre)
            if not 0 <= valor <= 1:
                raise ConfiguracionInvalida(f"{nombre} debe estar en [0, 1]: {valor}")
        if self.canales < 1:
            raise ConfiguracionInvalida(f"canales debe ser >= 1: {self.canales}")
        if self.pasos < 1:
            raise ConfiguracionInvalida(f"pasos debe ser >= 1: {self.pasos}")
        if self.modo not in MODOS:
            raise ConfiguracionInvalida(f"Modo desconocido: {self.modo}. Opciones válidas: {list(MODOS)}")

    @classmethod
    def desde_parametros(cls, parametros=None):
        parametros = dict(dict(PARAMETROS_GA, modo="GA1"), **(parametros or {}))
        return cls(**{nombre: parametros[nombre] for nombre in cls.__dataclass_fields__})


@dataclass
class RegistroEjecucion:
    """
    Historia de una ejecución: un registro por iteración completada.

    Atributos:
    ----------
    modo : str
    registros : list de dict
        Columnas de COLUMNAS_REGISTRO
    desgloses : list
        Resultado del evaluador para best1 en cada iteración
    poblacion_final : list de Cromosoma
    """

    modo: str = "GA1"
    registros: list = field(default_factory=list)
    desgloses: list = field(default_factory=list)
    poblacion_final: list = field(default_factory=list)

    def anadir(self, iteracion, mejor, media, desglose, transcurrido_ms):
        self.registros.append({
            "iteration": iteracion,
            "best_fitness": mejor,
            "mean_fitness": media,
            "cost": getattr(desglose, "cost", np.nan),
            "score": getattr(desglose, "score", np.nan),
            "elapsed_ms": transcurrido_ms,
        })
        self.desgloses.append(desglose)

    def __len__(self):
        return len(self.registros)

    @property
    def mejores(self):
        return [r["best_fitness"] for r in self.registros]

    def a_dataframe(self):
        return pd.DataFrame(self.registros, columns=COLUMNAS_REGISTRO)

    def guardar_csv(self, ruta):
        self.a_dataframe().to_csv(ruta, index=False)
        return ruta


def _valor(resultado):
    """El evaluador puede devolver un número o un desglose con atributo valor."""
    return float(getattr(resultado, "valor", resultado))


# ============================================================================
# 2. OPERADORES
# ============================================================================

def _altura_libre(genes, canal, paso, muestreo, indice, rng):
    """
    Muestrea un gen para (canal, paso) que no repita otra altura del paso.

    Tras INTENTOS_REMUESTREO intentos fallidos el gen queda en silencio.
    """
    ocupadas = {int(g) for k, g in enumerate(genes[:, paso]) if k != canal and g}
    for _ in range(INTENTOS_REMUESTREO):
        tecla = muestreo(indice, rng)
        gen = 0 if tecla == SILENCIO else tecla + 1
        if gen == 0 or gen not in ocupadas:
            return gen
    return 0


def inicializar_poblacion(config, indice, rng):
    """
    Población inicial de config.poblacion cromosomas canales × pasos.

    Cada gen se muestrea independientemente de la distribución de notas del
    corpus (el silencio con su probabilidad en el corpus). Las alturas
    repetidas en un mismo paso se vuelven a muestrear.
    """
    poblacion = []
    for _ in range(config.poblacion):
        genes = np.zeros((config.canales, config.pasos), dtype=np.int16)
        for canal in range(config.canales):
            for paso in range(config.pasos):
                genes[canal, paso] = _altura_libre(genes, canal, paso, muestrear_nota, indice, rng)
        poblacion.append(Cromosoma(genes))
    return poblacion


def cruzar(mejor1, mejor2):
    """
    Hijo con los pasos 0..⌊pasos/2⌋-1 de mejor1 y el resto de mejor2, en
    todos los canales.

    Errores:
    --------
    FormasIncompatibles si los padres no tienen la misma forma.
    """
    if mejor1.forma != mejor2.forma:
        raise FormasIncompatibles(f"No se pueden cruzar {mejor1.forma} y {mejor2.forma}")
    mitad = mejor1.pasos // 2
    return Cromosoma(np.concatenate([mejor1.genes[:, :mitad], mejor2.genes[:, mitad:]], axis=1))


def mutar(hijo, tasa, indice, rng):
    """
    Mutación gen a gen.

    Con probabilidad `tasa`, cada gen no nulo pasa a 0 y cada gen nulo pasa
    a una altura muestreada del corpus (sin silencio), sin repetir otra
    altura del mismo paso.
    """
    if not 0 <= tasa <= 1:
        raise ConfiguracionInvalida(f"tasa de mutación fuera de [0, 1]: {tasa}")
    marcados = rng.random(hijo.forma) < tasa
    if not marcados.any():
        return hijo
    genes = hijo.genes.copy()
    for canal, paso in zip(*np.nonzero(marcados)):
        if genes[canal, paso]:
            genes[canal, paso] = 0
        else:
            genes[canal, paso] = _altura_libre(genes, canal, paso, muestrear_tono, indice, rng)
    return Cromosoma(genes)


def reproducir(mejor1, mejor2, config, indice, rng):
    """Siguiente generación: los dos élite seguidos de hijos mutados."""
    elite = (mejor1, mejor2)
    hijos = list(elite)
    while len(hijos) < config.poblacion:
        if rng.random() < config.tasa_cruce:
            hijo = cruzar(mejor1, mejor2)
        else:
            hijo = elite[int(rng.integers(2))]
        hijos.append(mutar(hijo, config.tasa_mutacion, indice, rng))
    return hijos


# ============================================================================
# 3. BUCLE PRINCIPAL
# ============================================================================

def ejecutar(config, evaluador, indice, mostrar_progreso=False):
    """
    Ejecuta el algoritmo genético.

    Parámetros:
    -----------
    config : ConfigGA
    evaluador : callable
        Cromosoma -> número o desglose con atributo `valor` (a maximizar).
        Si tiene método nueva_generacion se le pasa la población al empezar
        cada iteración.
    indice : IndiceCorpus
    mostrar_progreso : bool

    Retorna:
    --------
    (mejor, registro) : (Cromosoma, RegistroEjecucion)
    """
    rng = np.random.default_rng(config.semilla)
    poblacion = inicializar_poblacion(config, indice, rng)
    registro = RegistroEjecucion(modo=config.modo)
    mejor, mejor_valor = None, -np.inf
    inicio = time.perf_counter()

    iteraciones = tqdm(range(config.iteraciones), desc=config.modo, disable=not mostrar_progreso)
    for iteracion in iteraciones:
        if hasattr(evaluador, "nueva_generacion"):
            evaluador.nueva_generacion(poblacion)
        resultados = [evaluador(cromosoma) for cromosoma in poblacion]
        valores = np.array([_valor(r) for r in resultados])
        orden = np.argsort(-valores, kind="stable")
        i1, i2 = int(orden[0]), int(orden[1])

        if valores[i1] > mejor_valor:
            mejor, mejor_valor = poblacion[i1], valores[i1]
        registro.anadir(
            iteracion,
            float(valores[i1]),
            float(valores.mean()),
            resultados[i1],
            (time.perf_counter() - inicio) * 1000.0,
        )
        if mostrar_progreso:
            iteraciones.set_postfix(mejor=f"{valores[i1]:.5f}")

        if iteracion < config.iteraciones - 1:
            poblacion = reproducir(poblacion[i1], poblacion[i2], config, indice, rng)

    registro.poblacion_final = poblacion
    logger.info(
        "%s: %d iteraciones, mejor inicial %.6f, mejor final %.6f",
        config.modo, len(registro), registro.mejores[0], registro.mejores[-1],
    )
    return mejor, registro


# ============================================================================
# 4. COMPARACIÓN DE TIEMPOS
# ============================================================================

def comparar_tiempos(config, evaluadores, indice, longitudes=(32, 64, 128, 256)):
    """
    Mide el tiempo de ejecución de cada modo para varias longitudes.

    Parámetros:
    -----------
    config : ConfigGA
        Se reemplazan pasos y modo en cada ejecución
    evaluadores : dict {modo: evaluador}
    longitudes : iterable de int

    Retorna:
    --------
    pd.DataFrame
        Columnas: modo, pasos, segundos, ms_por_iteracion, mejor_final
    """
    filas = []
    for modo, evaluador in evaluadores.items():
        for pasos in longitudes:
            config_ejecucion = replace(config, pasos=pasos, modo=modo)
            inicio = time.perf_counter()
            _, registro = ejecutar(config_ejecucion, evaluador, indice)
            segundos = time.perf_counter() - inicio
            filas.append({
                "modo": modo,
                "pasos": pasos,
                "segundos": segundos,
                "ms_por_iteracion": 1000.0 * segundos / config.iteraciones,
                "mejor_final": registro.mejores[-1],
            })
            logger.info("%s con %d pasos: %.3f s", modo, pasos, segundos)
    return pd.DataFrame(filas)


def visualizar_tiempos(tiempos, ruta_guardado=None):
    """Tiempo de ejecución frente a longitud del cromosoma, una línea por modo."""
    plt.figure(figsize=(10, 6))
    sns.lineplot(data=tiempos, x="pasos", y="segundos", hue="modo", marker="o")
    plt.xlabel("Longitud del cromosoma (ticks)", fontsize=12)
    plt.ylabel("Tiempo de ejecución (s)", fontsize=12)
    plt.title("Tiempo de GA1 y GA2 según la longitud", fontsize=14, fontweight="bold")
    plt.grid(True, alpha=0.3)
    plt.tight_layout()
    if ruta_guardado:
        plt.savefig(ruta_guardado, dpi=150, bbox_inches="tight")
    plt.close()
