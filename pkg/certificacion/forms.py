import json

from django import forms

from .domain import make_domain
from .exceptions import ConfigInvalidError, ErrorCertificacion
from .transport import METHODS

SOLVER_CHOICES = [('auto', 'Automático')] + [(m, m) for m in METHODS]
RANDOM_KINDS = ('interval', 'box', 'triangle', 'quadrilateral')


# --- UTILIDADES DE VALIDACIÓN ---

def _es_numero(valor):
    return isinstance(valor, (int, float)) and not isinstance(valor, bool)


def _lista_numeros(valor, nombre, minimo=None):
    if _es_numero(valor):
        valor = [valor]
    if not isinstance(valor, list) or not valor or not all(_es_numero(v) for v in valor):
        raise forms.ValidationError(f'{nombre} debe ser un número o una lista no vacía de números.')
    if minimo is not None and any(v <= minimo for v in valor):
        raise forms.ValidationError(f'Todos los valores de {nombre} deben ser > {minimo:g}.')
    return [float(v) for v in valor]


def _dominio(descripcion):
    try:
        return make_domain(descripcion)
    except ErrorCertificacion as exc:
        raise forms.ValidationError(f'Dominio inválido: {exc}')


def _campo(descripcion, nombre='field'):
    if isinstance(descripcion, (str, int, float)) and not isinstance(descripcion, bool):
        return descripcion
    if isinstance(descripcion, dict) and descripcion:
        return descripcion
    raise forms.ValidationError(f'{nombre} debe ser una expresión o un objeto (expr, poly, terms, csv).')


def pares_pq(params):
    """Lista de pares (p, q) con 1 < q < p."""
    if not isinstance(params, list) or not params:
        raise forms.ValidationError('params debe ser una lista de pares [p, q].')
    pares = []
    for par in params:
        if not (isinstance(par, (list, tuple)) and len(par) == 2 and all(_es_numero(v) for v in par)):
            raise forms.ValidationError(f'Par inválido {par!r}: se esperaba [p, q].')
        p, q = float(par[0]), float(par[1])
        if not 1 < q < p:
            raise forms.ValidationError(f'El par p={p:g}, q={q:g} no cumple 1 < q < p.')
        pares.append((p, q))
    return pares


# --- FORMULARIOS DE CONFIGURACIÓN ---

class ConfiguracionBaseForm(forms.Form):
    experiment_id = forms.CharField(max_length=200, help_text='Identificador del experimento (prefijo de las filas).')
    resolution = forms.IntegerField(required=False, min_value=2, help_text='Celdas por eje.')
    seed = forms.IntegerField(required=False, min_value=0, help_text='Semilla de numpy.random.default_rng.')
    solver = forms.ChoiceField(choices=SOLVER_CHOICES, required=False, help_text='Solver de Wasserstein.')

    def clean_experiment_id(self):
        ident = self.cleaned_data.get('experiment_id', '').strip()
        if not ident:
            raise forms.ValidationError('El identificador del experimento es obligatorio.')
        if any(c in ident for c in ',\n\r"'):
            raise forms.ValidationError('El identificador no puede contener comas, comillas ni saltos de línea.')
        return ident

    def clean_solver(self):
        return self.cleaned_data.get('solver') or None


class ParametrosMixin:
    """p y q sueltos o una lista params de pares; deja cleaned_data['pares']."""

    def _limpiar_pares(self, cleaned_data):
        p, q, params = cleaned_data.get('p'), cleaned_data.get('q'), cleaned_data.get('params')
        if params is not None:
            cleaned_data['pares'] = pares_pq(params)
        elif p is not None and q is not None:
            cleaned_data['pares'] = pares_pq([[p, q]])
        else:
            raise forms.ValidationError('Indique p y q, o la lista params. Se requiere 1 < q < p.')
        return cleaned_data


class ExperimentoForm(ParametrosMixin, ConfiguracionBaseForm):
    domain = forms.JSONField(help_text='{"kind": "interval"|"box"|"polygon2d", ...}')
    field = forms.JSONField(help_text='Expresión en x1..xN u objeto {expr|poly|terms|csv}.')
    p = forms.FloatField(required=False, help_text='Exponente del gradiente.')
    q = forms.FloatField(required=False, help_text='Exponente de la norma, 1 < q < p.')
    params = forms.JSONField(required=False, help_text='Lista de pares [p, q].')
    coarse_resolution = forms.IntegerField(required=False, min_value=2,
                                           help_text='Resolución gruesa para la barra de error.')

    def clean_domain(self):
        return _dominio(self.cleaned_data.get('domain'))

    def clean_field(self):
        return _campo(self.cleaned_data.get('field'))

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data
        resolucion, gruesa = cleaned_data.get('resolution'), cleaned_data.get('coarse_resolution')
        if resolucion and gruesa and gruesa >= resolucion:
            raise forms.ValidationError('coarse_resolution debe ser menor que resolution.')
        return self._limpiar_pares(cleaned_data)


class BarridoForm(ParametrosMixin, ConfiguracionBaseForm):
    domains = forms.JSONField(required=False, help_text='Lista de dominios.')
    random_domains = forms.JSONField(required=False,
                                     help_text='{"count": N, "kinds": ["interval", "box", "triangle", "quadrilateral"]}')
    field_specs = forms.JSONField(required=False, help_text='Lista de campos.')
    random_fields = forms.JSONField(required=False, help_text='{"count": N, "degree": 1..4}')
    params = forms.JSONField(help_text='Lista de pares [p, q].')
    inequalities = forms.JSONField(required=False, help_text='Subconjunto de main, moment, triangle, nash, pw.')
    q_limit = forms.JSONField(required=False, help_text='Valores de q hacia p para tabular pw.')
    coarse_resolution = forms.IntegerField(required=False, min_value=2)
    workers = forms.IntegerField(required=False, min_value=1, help_text='Hilos del barrido.')

    def clean_domains(self):
        dominios = self.cleaned_data.get('domains')
        if dominios is None:
            return []
        if not isinstance(dominios, list):
            raise forms.ValidationError('domains debe ser una lista.')
        return [_dominio(d) for d in dominios]

    def clean_field_specs(self):
        campos = self.cleaned_data.get('field_specs')
        if campos is None:
            return []
        if not isinstance(campos, list):
            raise forms.ValidationError('field_specs debe ser una lista.')
        return [_campo(c) for c in campos]

    def clean_random_domains(self):
        azar = self.cleaned_data.get('random_domains')
        if azar is None:
            return None
        if not isinstance(azar, dict) or not isinstance(azar.get('count'), int) or azar['count'] < 1:
            raise forms.ValidationError('random_domains necesita un count entero positivo.')
        tipos = azar.get('kinds', list(RANDOM_KINDS))
        if not tipos or any(t not in RANDOM_KINDS for t in tipos):
            raise forms.ValidationError(f'Tipos aleatorios válidos: {", ".join(RANDOM_KINDS)}.')
        return {'count': azar['count'], 'kinds': list(tipos)}

    def clean_random_fields(self):
        azar = self.cleaned_data.get('random_fields')
        if azar is None:
            return None
        if not isinstance(azar, dict) or not isinstance(azar.get('count'), int) or azar['count'] < 1:
            raise forms.ValidationError('random_fields necesita un count entero positivo.')
        grado = azar.get('degree', 4)
        if not isinstance(grado, int) or not 1 <= grado <= 4:
            raise forms.ValidationError('El grado de los polinomios aleatorios va de 1 a 4.')
        return {'count': azar['count'], 'degree': grado}

    def clean_inequalities(self):
        ids = self.cleaned_data.get('inequalities')
        if ids is None:
            return ['main', 'moment', 'triangle', 'nash', 'pw']
        validas = ('main', 'moment', 'triangle', 'nash', 'pw')
        if not isinstance(ids, list) or not ids or any(i not in validas for i in ids):
            raise forms.ValidationError(f'inequalities admite: {", ".join(validas)}.')
        return [i for i in validas if i in ids]

    def clean_q_limit(self):
        valores = self.cleaned_data.get('q_limit')
        if valores is None:
            return []
        return _lista_numeros(valores, 'q_limit', minimo=1.0)

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data
        if not cleaned_data.get('domains') and not cleaned_data.get('random_domains'):
            raise forms.ValidationError('El barrido necesita domains o random_domains.')
        if not cleaned_data.get('field_specs') and not cleaned_data.get('random_fields'):
            raise forms.ValidationError('El barrido necesita field_specs o random_fields.')
        return self._limpiar_pares(cleaned_data)


class EspectroForm(ConfiguracionBaseForm):
    domains = forms.JSONField(help_text='Dominio o lista de dominios.')
    p = forms.JSONField(help_text='Exponente o lista de exponentes p > 1.')

    def clean_domains(self):
        dominios = self.cleaned_data.get('domains')
        if isinstance(dominios, dict):
            dominios = [dominios]
        if not isinstance(dominios, list) or not dominios:
            raise forms.ValidationError('domains debe ser un dominio o una lista de dominios.')
        return [_dominio(d) for d in dominios]

    def clean_p(self):
        return _lista_numeros(self.cleaned_data.get('p'), 'p', minimo=1.0)

    def clean_resolution(self):
        resolucion = self.cleaned_data.get('resolution')
        if resolucion is not None and resolucion < 4:
            raise forms.ValidationError('El autovalor necesita resolution >= 4 (se compara con resolution/2).')
        return resolucion


class GeodesicaForm(ConfiguracionBaseForm):
    domain = forms.JSONField(help_text='Intervalo donde viven las densidades.')
    f0 = forms.JSONField(help_text='Densidad inicial (no negativa).')
    f1 = forms.JSONField(help_text='Densidad final (no negativa).')
    q = forms.JSONField(required=False, help_text='Exponentes q >= 1 de la convexidad.')
    times = forms.JSONField(required=False, help_text='Tiempos en [0, 1].')
    m = forms.FloatField(required=False, help_text='Exponente del costo para la geodésica por plan.')

    def clean_domain(self):
        dominio = _dominio(self.cleaned_data.get('domain'))
        if dominio.dim != 1:
            raise forms.ValidationError('El modo densidad de las geodésicas requiere un intervalo.')
        return dominio

    def clean_f0(self):
        return _campo(self.cleaned_data.get('f0'), 'f0')

    def clean_f1(self):
        return _campo(self.cleaned_data.get('f1'), 'f1')

    def clean_q(self):
        valores = self.cleaned_data.get('q')
        if valores is None:
            return [1.0, 2.0, 3.0]
        valores = _lista_numeros(valores, 'q')
        if any(v < 1 for v in valores):
            raise forms.ValidationError('Los exponentes q deben ser >= 1.')
        return valores

    def clean_times(self):
        valores = self.cleaned_data.get('times')
        if valores is None:
            return [k / 10 for k in range(11)]
        valores = _lista_numeros(valores, 'times')
        if any(not 0 <= t <= 1 for t in valores):
            raise forms.ValidationError('Los tiempos deben estar en [0, 1].')
        return valores

    def clean_m(self):
        m = self.cleaned_data.get('m')
        if m is None:
            return 2.0
        if m <= 1:
            raise forms.ValidationError('El exponente del costo debe ser > 1.')
        return m


class EscalamientoForm(ParametrosMixin, ConfiguracionBaseForm):
    params = forms.JSONField(help_text='Lista de pares [p, q].')
    n = forms.JSONField(help_text='Al menos 3 valores de n para [0,1] x [0,1/n].')

    def clean_n(self):
        valores = _lista_numeros(self.cleaned_data.get('n'), 'n', minimo=0.0)
        if len(set(valores)) < 3:
            raise forms.ValidationError('Se necesitan al menos 3 valores distintos de n.')
        return valores

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data
        return self._limpiar_pares(cleaned_data)


FORMULARIOS = {
    'certify': ExperimentoForm,
    'sweep': BarridoForm,
    'eigen': EspectroForm,
    'geodesic': GeodesicaForm,
    'scaling': EscalamientoForm,
}


def validar(subcomando, datos):
    """Valida la configuración del subcomando; los errores se levantan como ConfigInvalidError."""
    if not isinstance(datos, dict):
        raise ConfigInvalidError('la configuración debe ser un objeto JSON')
    clase = FORMULARIOS[subcomando]
    desconocidas = sorted(set(datos) - set(clase.base_fields) - {'out'})
    if desconocidas:
        raise ConfigInvalidError(f'claves desconocidas en la configuración: {", ".join(desconocidas)}')
    ligados = {}
    for nombre, valor in datos.items():
        campo = clase.base_fields.get(nombre)
        # forms.JSONField espera texto JSON
        ligados[nombre] = json.dumps(valor) if isinstance(campo, forms.JSONField) else valor
    form = clase(ligados)
    if not form.is_valid():
        mensajes = []
        for campo, errores in form.errors.items():
            prefijo = '' if campo == '__all__' else f'{campo}: '
            mensajes.extend(f'{prefijo}{e}' for e in errores)
        raise ConfigInvalidError('; '.join(mensajes))
    return form.cleaned_data


def esquema():
    """Esquema de configuración por subcomando, generado desde los formularios."""
    salida = {}
    for subcomando, clase in FORMULARIOS.items():
        salida[subcomando] = {
            nombre: {
                'type': type(campo).__name__.replace('Field', '').lower(),
                'required': campo.required,
                'help': str(campo.help_text or ''),
            }
            for nombre, campo in clase.base_fields.items()
        }
    return salida
