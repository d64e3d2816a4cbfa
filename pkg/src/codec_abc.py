"""
CODEC_ABC: LECTURA Y ESCRITURA DE NOTACIÓN ABC
==============================================

Este módulo convierte un subconjunto práctico de la notación ABC en una
lista de eventos de nota cuantizados y vuelve a escribirla, de modo que los
ficheros de corpus legibles por humanos se puedan llevar a la matriz de piano.

FUNCIONALIDADES:
- Lectura de cabeceras X, T, M, L, K (otras cabeceras se conservan tal cual)
- Notas A-G/a-g con alteraciones (^, ^^, _, __, =) y marcas de octava (' y ,)
- Multiplicadores y divisores de duración, silencios (z), barras de compás
- Acordes entre corchetes [CEG] y voces múltiples (V:)
- Escritura de vuelta a ABC con ida y vuelta exacta sobre la rejilla

CÓMO FUNCIONA:
1. La cabecera termina en el campo K; X y K son obligatorios
2. Cada voz avanza un cursor en ticks (1 tick = 1/64 de redonda)
3. Cada nota se resuelve con la armadura y las alteraciones vigentes en el
   compás, y se traduce a índice de tecla (0 = A0, 39 = C4, 87 = C8)
4. Las notas de un acorde ocupan carriles consecutivos dentro de su voz;
   cada voz ABC ocupa tantos carriles como su acorde más ancho
5. Al escribir, cada carril se emite como una voz V: sin acordes, con las
   alteraciones explícitas mínimas para reproducir exactamente las alturas

RESTRICCIONES:
- Tresillos, ligaduras, notas de adorno, ornamentos, repeticiones, letras y
  campos en línea provocan TokenNoSoportado
- Duraciones que no caen en la rejilla de 1/64 se rechazan, no se redondean
"""

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from errores import CabeceraMalformada, NotaFueraDeRango, TokenNoSoportado


TICKS_POR_REDONDA = 64
NUMERO_TECLAS = 88
MIDI_A0 = 21
TONO_DO_CENTRAL = 39  # C4 en la numeración de teclas desde A0

SEMITONO_NATURAL = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
NOMBRES_CROMATICOS = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"]

ALTERACIONES = {"^^": 2, "^": 1, "=": 0, "_": -1, "__": -2}

ORDEN_SOSTENIDOS = "FCGDAEB"
ORDEN_BEMOLES = "BEADGCF"
QUINTAS_TONICA = {"F": -1, "C": 0, "G": 1, "D": 2, "A": 3, "E": 4, "B": 5}
DESPLAZAMIENTO_MODO = {
    "": 0, "maj": 0, "major": 0, "ion": 0, "ionian": 0,
    "m": -3, "min": -3, "minor": -3, "aeo": -3, "aeolian": -3,
    "mix": -1, "mixolydian": -1, "dor": -2, "dorian": -2,
    "phr": -4, "phrygian": -4, "lyd": 1, "lydian": 1, "loc": -5, "locrian": -5,
}

_RE_CAMPO = re.compile(r"^([A-Za-z]):(.*)$")
_RE_CLAVE = re.compile(r"^([A-G])([#b]?)\s*([A-Za-z]*)$")
_RE_NOTA = re.compile(r"(\^\^|\^|__|_|=)?([A-Ga-g])([',]*)(\d*)(/*)(\d*)")
_RE_SILENCIO = re.compile(r"z(\d*)(/*)(\d*)")
_RE_LONGITUD = re.compile(r"(\d*)(/*)(\d*)")
_RE_BARRA = re.compile(r"\|\]|\|\||\[\||\|")


# ============================================================================
# 1. TIPOS DE DATOS
# ============================================================================

@dataclass(frozen=True, order=True)
class EventoNota:
    """
    Una nota sonando en una voz.

    El orden de los campos define el orden canónico de los eventos dentro de
    una pieza: inicio, voz, tono.
    """

    inicio: int
    voz: int
    tono: int
    duracion: int

    def __post_init__(self):
        if not 0 <= self.tono < NUMERO_TECLAS:
            raise NotaFueraDeRango(None, self.tono + MIDI_A0)
        if self.duracion < 1:
            raise ValueError(f"Duración no positiva: {self.duracion}")
        if self.inicio < 0 or self.voz < 0:
            raise ValueError(f"Inicio y voz deben ser no negativos: {self}")

    @property
    def fin(self):
        return self.inicio + self.duracion


@dataclass(frozen=True)
class Pieza:
    """
    Pieza polifónica cuantizada.

    Atributos:
    ----------
    eventos : tuple de EventoNota
        Ordenados canónicamente al construir la pieza
    compas : (int, int)
        Numerador y denominador del compás
    unidad : Fraction
        Longitud por defecto de nota (campo L) en fracción de redonda
    clave : str
        Armadura tal como aparece en el campo K
    titulo : str
    canales : int
        Número de carriles; 1 + la voz máxima si hay eventos
    duracion_total : int
        Extensión de la pieza en ticks (incluye silencios finales)
    indice : int
        Número de referencia X
    cabeceras_extra : tuple de str
        Líneas de cabecera no interpretadas, conservadas para la escritura
    """

    eventos: tuple = ()
    compas: tuple = (4, 4)
    unidad: Fraction = Fraction(1, 8)
    clave: str = "C"
    titulo: str = ""
    canales: int = 1
    duracion_total: int = 0
    indice: int = 1
    cabeceras_extra: tuple = field(default=())

    def __post_init__(self):
        eventos = tuple(sorted(self.eventos))
        object.__setattr__(self, "eventos", eventos)
        object.__setattr__(self, "unidad", Fraction(self.unidad))
        object.__setattr__(self, "compas", tuple(self.compas))
        object.__setattr__(self, "cabeceras_extra", tuple(self.cabeceras_extra))

        if len(self.compas) != 2 or min(self.compas) <= 0:
            raise ValueError(f"Compás inválido: {self.compas}")
        if self.unidad <= 0:
            raise ValueError(f"Unidad de nota no positiva: {self.unidad}")
        if eventos:
            voz_maxima = max(e.voz for e in eventos)
            if self.canales != voz_maxima + 1:
                raise ValueError(
                    f"canales={self.canales} no coincide con 1 + voz máxima ({voz_maxima + 1})"
                )
            fin = max(e.fin for e in eventos)
            if self.duracion_total < fin:
                raise ValueError(f"duracion_total={self.duracion_total} menor que el último fin {fin}")
        elif self.canales < 1:
            raise ValueError("Una pieza necesita al menos un canal")
        if self.duracion_total < 0:
            raise ValueError("duracion_total negativa")

        # Solapamientos dentro de una misma voz
        ultimo_fin = {}
        for evento in sorted(eventos, key=lambda e: (e.voz, e.inicio)):
            if evento.inicio < ultimo_fin.get(evento.voz, 0):
                raise ValueError(f"Eventos solapados en la voz {evento.voz}: {evento}")
            ultimo_fin[evento.voz] = evento.fin

    @property
    def ticks_compas(self):
        """Ticks por compás según el compás de la pieza (al menos 1)."""
        num, den = self.compas
        return max(1, (TICKS_POR_REDONDA * num) // den)

    def eventos_voz(self, voz):
        return [e for e in self.eventos if e.voz == voz]


# ============================================================================
# 2. ALTURAS Y ARMADURAS
# ============================================================================

def nombre_tecla(tono):
    """Nombre científico de una tecla: 39 -> 'C4', 0 -> 'A0'."""
    midi = tono + MIDI_A0
    return f"{NOMBRES_CROMATICOS[midi % 12]}{midi // 12 - 1}"


def alteraciones_armadura(clave):
    """
    Calcula la alteración de cada letra para una armadura ABC.

    Parámetros:
    -----------
    clave : str
        Valor del campo K ("G", "Dm", "Bb", "A dor", "none", ...)

    Retorna:
    --------
    dict
        {letra: alteración en semitonos}

    Explicación:
    ------------
    La armadura se reduce a un número de quintas: el de la tónica en modo
    mayor más el desplazamiento del modo (menor = -3, dórico = -2, ...).
    Quintas positivas añaden sostenidos en el orden FCGDAEB y negativas
    bemoles en el orden BEADGCF.
    """
    alteraciones = {letra: 0 for letra in SEMITONO_NATURAL}
    texto = clave.strip()
    if texto.lower() == "none":
        return alteraciones

    coincidencia = _RE_CLAVE.match(texto)
    if not coincidencia:
        raise CabeceraMalformada(f"Armadura no reconocida: K:{clave}")
    tonica, signo, modo = coincidencia.groups()
    if modo.lower() not in DESPLAZAMIENTO_MODO:
        raise CabeceraMalformada(f"Modo no reconocido en K:{clave}")

    quintas = QUINTAS_TONICA[tonica] + {"": 0, "#": 7, "b": -7}[signo]
    quintas += DESPLAZAMIENTO_MODO[modo.lower()]
    if not -7 <= quintas <= 7:
        raise CabeceraMalformada(f"Armadura con más de 7 alteraciones: K:{clave}")

    if quintas > 0:
        for letra in ORDEN_SOSTENIDOS[:quintas]:
            alteraciones[letra] = 1
    else:
        for letra in ORDEN_BEMOLES[:-quintas]:
            alteraciones[letra] = -1
    return alteraciones


def _parsear_compas(valor):
    valor = valor.strip()
    if valor == "C":
        return (4, 4)
    if valor == "C|":
        return (2, 2)
    partes = valor.split("/")
    try:
        num, den = int(partes[0]), int(partes[1])
    except (ValueError, IndexError):
        raise CabeceraMalformada(f"Compás no reconocido: M:{valor}")
    if len(partes) != 2 or num <= 0 or den <= 0:
        raise CabeceraMalformada(f"Compás no reconocido: M:{valor}")
    return (num, den)


def _unidad_por_defecto(compas):
    """Regla ABC: 1/16 si el compás vale menos de 3/4, si no 1/8."""
    if compas and Fraction(*compas) < Fraction(3, 4):
        return Fraction(1, 16)
    return Fraction(1, 8)


def _parsear_unidad(valor):
    try:
        unidad = Fraction(valor.strip())
    except (ValueError, ZeroDivisionError):
        raise CabeceraMalformada(f"Longitud unidad no reconocida: L:{valor}")
    if unidad <= 0:
        raise CabeceraMalformada(f"Longitud unidad no positiva: L:{valor}")
    return unidad


# ============================================================================
# 3. LECTURA
# ============================================================================

class _EstadoVoz:
    """Cursor temporal y eventos locales de una voz ABC."""

    def __init__(self):
        self.cursor = 0
        self.eventos = []  # (inicio, carril_local, tono, duracion)
        self.anchura = 1
        self.alteraciones_compas = {}


def _fraccion_longitud(posicion, token, num_txt, barras, den_txt):
    """Multiplicador de duración de un sufijo ABC: '', '2', '/', '//', '3/2', '/4'."""
    if barras and len(barras) > 1 and den_txt:
        raise TokenNoSoportado(posicion, token, "divisor ambiguo")
    num = int(num_txt) if num_txt else 1
    den = (int(den_txt) if den_txt else 2 ** len(barras)) if barras else 1
    if num == 0 or den == 0:
        raise TokenNoSoportado(posicion, token, "duración nula")
    return Fraction(num, den)


def _ticks(posicion, token, unidad, num_txt, barras, den_txt):
    """Convierte el sufijo de duración de un token en ticks enteros."""
    ticks = TICKS_POR_REDONDA * unidad * _fraccion_longitud(posicion, token, num_txt, barras, den_txt)
    if ticks.denominator != 1:
        raise TokenNoSoportado(posicion, token, "duración fuera de la rejilla de 1/64")
    return int(ticks)


def _resolver_tono(posicion, alteracion_txt, letra, octavas_txt, armadura, estado):
    """Traduce letra + alteración + octava a índice de tecla."""
    octava = 5 if letra.islower() else 4
    octava += octavas_txt.count("'") - octavas_txt.count(",")
    letra = letra.upper()

    if alteracion_txt is not None:
        alteracion = ALTERACIONES[alteracion_txt]
        estado.alteraciones_compas[(letra, octava)] = alteracion
    else:
        alteracion = estado.alteraciones_compas.get((letra, octava), armadura[letra])

    midi = 12 * (octava + 1) + SEMITONO_NATURAL[letra] + alteracion
    tono = midi - MIDI_A0
    if not 0 <= tono < NUMERO_TECLAS:
        raise NotaFueraDeRango(posicion, midi)
    return tono


def _leer_linea_cuerpo(linea, desplazamiento, unidad, armadura, estado):
    """Tokeniza una línea del cuerpo y añade sus eventos a la voz activa."""
    i = 0
    while i < len(linea):
        caracter = linea[i]
        posicion = desplazamiento + i

        if caracter.isspace():
            i += 1
            continue

        if caracter == "\\" and not linea[i + 1:].strip():
            # continuación de línea
            break

        barra = _RE_BARRA.match(linea, i)
        if barra:
            if linea.startswith(":", barra.end()):
                raise TokenNoSoportado(posicion, linea[i:barra.end() + 1], "repeticiones")
            estado.alteraciones_compas = {}
            i = barra.end()
            continue

        if caracter == "[":
            i = _leer_acorde(linea, i, desplazamiento, unidad, armadura, estado)
            continue

        if caracter == "z":
            silencio = _RE_SILENCIO.match(linea, i)
            estado.cursor += _ticks(posicion, silencio.group(0), unidad, *silencio.groups())
            i = silencio.end()
            continue

        nota = _RE_NOTA.match(linea, i)
        if nota:
            alteracion, letra, octavas, num, barras, den = nota.groups()
            tono = _resolver_tono(posicion, alteracion, letra, octavas, armadura, estado)
            duracion = _ticks(posicion, nota.group(0), unidad, num, barras, den)
            estado.eventos.append((estado.cursor, 0, tono, duracion))
            estado.cursor += duracion
            i = nota.end()
            continue

        raise TokenNoSoportado(posicion, caracter)


def _leer_acorde(linea, i, desplazamiento, unidad, armadura, estado):
    """Lee [CEG]n; todas las notas del acorde deben durar lo mismo."""
    inicio_acorde = i
    posicion = desplazamiento + i
    if re.match(r"\[[A-Za-z]:", linea[i:]):
        raise TokenNoSoportado(posicion, linea[i:i + 3], "campos en línea")

    cierre = linea.find("]", i)
    if cierre < 0:
        raise TokenNoSoportado(posicion, "[", "acorde sin cerrar")

    notas = []
    j = i + 1
    while j < cierre:
        nota = _RE_NOTA.match(linea, j)
        if not nota or nota.end() > cierre:
            raise TokenNoSoportado(desplazamiento + j, linea[j], "dentro de un acorde")
        notas.append((desplazamiento + j, nota))
        j = nota.end()
    if not notas:
        raise TokenNoSoportado(posicion, "[]", "acorde vacío")

    longitud = _RE_LONGITUD.match(linea, cierre + 1)
    externo = _fraccion_longitud(posicion, longitud.group(0), *longitud.groups())

    eventos = []
    for posicion_nota, nota in notas:
        alteracion, letra, octavas, num, barras, den = nota.groups()
        tono = _resolver_tono(posicion_nota, alteracion, letra, octavas, armadura, estado)
        interna = _fraccion_longitud(posicion_nota, nota.group(0), num, barras, den)
        duracion = TICKS_POR_REDONDA * unidad * interna * externo
        if duracion.denominator != 1:
            raise TokenNoSoportado(posicion_nota, nota.group(0), "duración fuera de la rejilla de 1/64")
        eventos.append((tono, int(duracion)))

    if len({d for _, d in eventos}) != 1:
        raise TokenNoSoportado(posicion, linea[inicio_acorde:longitud.end()], "acorde con duraciones distintas")

    duracion = eventos[0][1]
    for carril, (tono, _) in enumerate(eventos):
        estado.eventos.append((estado.cursor, carril, tono, duracion))
    estado.anchura = max(estado.anchura, len(eventos))
    estado.cursor += duracion
    return longitud.end()


def parsear_abc(texto):
    """
    Convierte un texto ABC (una sola pieza) en una Pieza cuantizada.

    Parámetros:
    -----------
    texto : str
        Fuente ABC con al menos los campos X y K

    Retorna:
    --------
    Pieza

    Explicación:
    ------------
    La cabecera va desde X hasta K. M y L se interpretan; si falta L se usa
    la regla estándar (1/16 si el compás vale menos de 3/4, si no 1/8). Las
    líneas del cuerpo que empiezan por V: cambian la voz activa; cualquier
    otro campo en el cuerpo no está soportado.

    Las alteraciones accidentales duran hasta la siguiente barra de compás
    para la misma letra y octava, como en el estándar ABC.

    Errores:
    --------
    CabeceraMalformada si faltan X o K; TokenNoSoportado(posicion) para
    cualquier símbolo fuera del subconjunto; NotaFueraDeRango para notas
    fuera de A0-C8.
    """
    indice = None
    titulo = ""
    compas = None
    unidad = None
    clave = None
    extra = []

    desplazamiento = 0
    lineas = texto.splitlines(keepends=True)
    numero = 0

    # ---- Cabecera ----
    while numero < len(lineas):
        bruta = lineas[numero]
        linea = bruta.split("%", 1)[0].strip()
        numero += 1
        desplazamiento_linea = desplazamiento
        desplazamiento += len(bruta)
        if not linea:
            continue
        campo = _RE_CAMPO.match(linea)
        if not campo:
            if indice is None:
                raise CabeceraMalformada("La pieza debe empezar por el campo X")
            raise CabeceraMalformada(
                f"Línea de cuerpo antes del campo K (posición {desplazamiento_linea})"
            )
        letra, valor = campo.group(1), campo.group(2).strip()
        if indice is None:
            if letra != "X":
                raise CabeceraMalformada("La pieza debe empezar por el campo X")
            try:
                indice = int(valor)
            except ValueError:
                raise CabeceraMalformada(f"Número de referencia inválido: X:{valor}")
            continue
        if letra == "T" and not titulo:
            titulo = valor
        elif letra == "M":
            compas = _parsear_compas(valor)
        elif letra == "L":
            unidad = _parsear_unidad(valor)
        elif letra == "K":
            clave = valor
            break
        else:
            extra.append(f"{letra}:{valor}")

    if indice is None:
        raise CabeceraMalformada("Falta el campo X")
    if clave is None:
        raise CabeceraMalformada("Falta el campo K")

    armadura = alteraciones_armadura(clave)

    # ---- Cuerpo ----
    voces = {}
    orden_voces = []

    def voz(nombre):
        if nombre not in voces:
            voces[nombre] = _EstadoVoz()
            orden_voces.append(nombre)
        return voces[nombre]

    activa = None
    musica_iniciada = False
    for bruta in lineas[numero:]:
        desplazamiento_linea = desplazamiento
        desplazamiento += len(bruta)
        linea = bruta.split("%", 1)[0].rstrip("\r\n")
        if not linea.strip():
            continue
        campo = _RE_CAMPO.match(linea.strip())
        if campo:
            letra, valor = campo.group(1), campo.group(2).strip()
            if letra == "V":
                nombre = valor.split()[0] if valor.split() else ""
                activa = voz(nombre)
            elif letra in "ML" and not musica_iniciada:
                # M y L justo después de K siguen valiendo como cabecera
                if letra == "M":
                    compas = _parsear_compas(valor)
                else:
                    unidad = _parsear_unidad(valor)
            else:
                raise TokenNoSoportado(desplazamiento_linea, linea.strip()[:2], "campo en el cuerpo")
            continue
        if not musica_iniciada:
            if unidad is None:
                unidad = _unidad_por_defecto(compas)
            if compas is None:
                compas = (4, 4)
            musica_iniciada = True
        if activa is None:
            activa = voz("")
        _leer_linea_cuerpo(linea, desplazamiento_linea, unidad, armadura, activa)

    if unidad is None:
        unidad = _unidad_por_defecto(compas)
    if compas is None:
        compas = (4, 4)

    # ---- Carriles globales ----
    eventos = []
    carril_base = 0
    duracion_total = 0
    for nombre in orden_voces:
        estado = voces[nombre]
        for inicio, carril, tono, duracion in estado.eventos:
            eventos.append(EventoNota(inicio, carril_base + carril, tono, duracion))
        carril_base += estado.anchura
        duracion_total = max(duracion_total, estado.cursor)

    if eventos:
        canales = max(e.voz for e in eventos) + 1
    else:
        canales = max(1, carril_base)

    return Pieza(
        eventos=tuple(eventos),
        compas=compas,
        unidad=unidad,
        clave=clave,
        titulo=titulo,
        canales=canales,
        duracion_total=duracion_total,
        indice=indice,
        cabeceras_extra=tuple(extra),
    )


# ============================================================================
# 4. ESCRITURA
# ============================================================================

def _texto_longitud(ticks, unidad):
    multiplicador = Fraction(ticks) / (TICKS_POR_REDONDA * unidad)
    num, den = multiplicador.numerator, multiplicador.denominator
    if den == 1:
        return "" if num == 1 else str(num)
    if num == 1:
        return f"/{den}"
    return f"{num}/{den}"


def _deletrear(tono, armadura, alteraciones_compas):
    """
    Elige letra, octava y alteración explícita (o ninguna) para una tecla.

    Se prefiere una grafía que no necesite signo dado el contexto; si no la
    hay, la letra natural con '=' y después el sostenido.
    """
    midi = tono + MIDI_A0
    clase = midi % 12
    candidatos = []
    for letra, natural in SEMITONO_NATURAL.items():
        alteracion = ((clase - natural + 6) % 12) - 6
        if abs(alteracion) <= 1:
            octava = (midi - alteracion - natural) // 12 - 1
            candidatos.append((letra, octava, alteracion))
    candidatos.sort(key=lambda c: (c[2] != 0, -c[2]))

    for letra, octava, alteracion in candidatos:
        vigente = alteraciones_compas.get((letra, octava), armadura[letra])
        if vigente == alteracion:
            return _texto_nota(letra, octava, "")

    letra, octava, alteracion = candidatos[0]
    alteraciones_compas[(letra, octava)] = alteracion
    signo = {1: "^", 0: "=", -1: "_"}[alteracion]
    return _texto_nota(letra, octava, signo)


def _texto_nota(letra, octava, signo):
    if octava >= 5:
        return signo + letra.lower() + "'" * (octava - 5)
    return signo + letra + "," * (4 - octava)


def _cuerpo_carril(eventos, pieza, armadura, compases_por_linea=4):
    """Escribe un carril: notas, silencios de relleno y barras de compás."""
    ticks_compas = pieza.ticks_compas
    tokens = []
    alteraciones_compas = {}
    cursor = 0
    compases = 0

    def cerrar_compas_si_toca():
        nonlocal alteraciones_compas, compases
        if cursor > 0 and cursor % ticks_compas == 0 and cursor < pieza.duracion_total:
            compases += 1
            tokens.append("|\n" if compases % compases_por_linea == 0 else "|")
            alteraciones_compas = {}

    def silencio_hasta(destino):
        nonlocal cursor
        while cursor < destino:
            siguiente_barra = (cursor // ticks_compas + 1) * ticks_compas
            tramo = min(destino, siguiente_barra) - cursor
            tokens.append("z" + _texto_longitud(tramo, pieza.unidad))
            cursor += tramo
            cerrar_compas_si_toca()

    for evento in eventos:
        silencio_hasta(evento.inicio)
        tokens.append(_deletrear(evento.tono, armadura, alteraciones_compas)
                      + _texto_longitud(evento.duracion, pieza.unidad))
        cursor = evento.fin
        cerrar_compas_si_toca()
    silencio_hasta(pieza.duracion_total)

    texto = ""
    for token in tokens:
        if texto and not texto.endswith("\n") and not token.startswith("|"):
            texto += " "
        texto += token
    return texto.rstrip() + " |]" if tokens else ""


def emitir_abc(pieza):
    """
    Escribe una Pieza como texto ABC.

    Parámetros:
    -----------
    pieza : Pieza

    Retorna:
    --------
    str
        Texto ABC que, leído de nuevo con parsear_abc, da una pieza igual.

    Explicación:
    ------------
    Con un solo canal el cuerpo no lleva marcas de voz; con varios, cada
    carril se escribe como V:1, V:2, ... en orden, de modo que la lectura
    reconstruye los mismos índices de voz. Los huecos se rellenan con
    silencios partidos en las barras de compás. Una pieza sin eventos se
    escribe como silencios que cubren su duración.
    """
    armadura = alteraciones_armadura(pieza.clave)
    lineas = [f"X:{pieza.indice}"]
    if pieza.titulo:
        lineas.append(f"T:{pieza.titulo}")
    lineas.extend(pieza.cabeceras_extra)
    lineas.append(f"M:{pieza.compas[0]}/{pieza.compas[1]}")
    lineas.append(f"L:{pieza.unidad.numerator}/{pieza.unidad.denominator}")
    lineas.append(f"K:{pieza.clave}")

    for carril in range(pieza.canales):
        if pieza.canales > 1:
            lineas.append(f"V:{carril + 1}")
        cuerpo = _cuerpo_carril(pieza.eventos_voz(carril), pieza, armadura)
        if cuerpo:
            lineas.append(cuerpo)
    return "\n".join(lineas) + "\n"


# ============================================================================
# 5. FICHEROS
# ============================================================================

def leer_abc(ruta):
    """Lee un fichero ABC UTF-8 con una sola pieza."""
    return parsear_abc(Path(ruta).read_text(encoding="utf-8"))


def escribir_abc(pieza, ruta):
    """Escribe una pieza en un fichero ABC UTF-8."""
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    ruta.write_text(emitir_abc(pieza), encoding="utf-8")
    return ruta
