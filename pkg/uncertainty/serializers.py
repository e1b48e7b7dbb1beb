from pathlib import Path

from rest_framework import serializers
from rest_framework.fields import empty

from uncertainty.exceptions import ScenarioError

COMMANDS = (
    'prep-ur',
    'overall-width',
    'landau-pollak',
    'periodic',
    'covariant',
    'husimi',
    'werner-constant',
    'sequential',
    'arthurs-kelly',
)
STATE_KINDS = ('gaussian', 'box', 'random', 'file', 'target')


def validate_epsilon(value):
    if not 0 < value < 0.5:
        raise serializers.ValidationError("ε 必須介於 0 與 0.5 之間 (不含端點)")
    return value


def validate_positive(value):
    if not value > 0:
        raise serializers.ValidationError("必須大於 0")
    return value


class StrictSerializer(serializers.Serializer):
    """未宣告的欄位一律視為錯誤 (情境檔寫錯字時要馬上發現)"""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["未知的欄位"] for key in unknown})
        return super().to_internal_value(data)


def epsilon_field(**kwargs):
    return serializers.FloatField(validators=[validate_epsilon], help_text="信心參數 ε ∈ (0, 0.5)", **kwargs)


def epsilon_pair(default):
    return serializers.ListField(
        child=epsilon_field(), min_length=2, max_length=2, default=default, help_text="(ε1, ε2)")


# 1. 網格與狀態
class GridSerializer(StrictSerializer):
    n_points = serializers.IntegerField(help_text="格點數", min_value=16, max_value=4096, required=False)
    length = serializers.FloatField(help_text="位置視窗長度", validators=[validate_positive], required=False)


class StateSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=STATE_KINDS, help_text="狀態種類")
    a = serializers.FloatField(help_text="高斯寬度參數 a", validators=[validate_positive], required=False)
    b = serializers.FloatField(help_text="啁啾參數 b", default=0.0)
    c = serializers.FloatField(help_text="推動 (動量 ħc)", default=0.0)
    d = serializers.FloatField(help_text="平移", default=0.0)
    center = serializers.FloatField(help_text="箱形中心", default=0.0)
    width = serializers.FloatField(help_text="箱形寬度", validators=[validate_positive], required=False)
    terms = serializers.IntegerField(help_text="隨機疊加的項數", min_value=1, max_value=20, default=5)
    path = serializers.CharField(help_text="波函數 CSV 路徑", required=False)
    delta_q = serializers.FloatField(help_text="目標 ΔQ", validators=[validate_positive], required=False)
    delta_p = serializers.FloatField(help_text="目標 ΔP", validators=[validate_positive], required=False)

    def validate(self, attrs):
        kind = attrs['kind']
        needed = {'gaussian': ['a'], 'box': ['width'], 'file': ['path'], 'target': ['delta_q', 'delta_p']}
        missing = [name for name in needed.get(kind, []) if name not in attrs]
        if missing:
            raise serializers.ValidationError({name: [f"{kind} 狀態必須提供這個欄位"] for name in missing})
        if kind == 'file' and not Path(attrs['path']).is_file():
            raise serializers.ValidationError({'path': ["檔案不存在"]})
        return attrs


# 2. 各子命令的參數
class PrepUrParameters(StrictSerializer):
    random_states = serializers.IntegerField(help_text="隨機狀態數", min_value=0, default=50)
    targets = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(validators=[validate_positive]),
                                    min_length=2, max_length=2),
        default=[[1.0, 0.5], [1.0, 1.0]],
        help_text="要重現的 (ΔQ, ΔP) 組合",
    )


class OverallWidthParameters(StrictSerializer):
    epsilons = serializers.ListField(
        child=serializers.ListField(child=epsilon_field(), min_length=2, max_length=2),
        default=[[0.01, 0.01], [0.05, 0.05], [0.2, 0.2]],
        help_text="(ε1, ε2) 組合",
    )
    random_states = serializers.IntegerField(help_text="隨機狀態數", min_value=0, default=100)
    sweep = serializers.BooleanField(help_text="輸出 ε 掃描曲線", default=True)


class LandauPollakParameters(StrictSerializer):
    areas = serializers.ListField(
        child=serializers.FloatField(min_value=0.01, max_value=50.0),
        default=[0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.25, 8.0],
        help_text="面積 |X||Y|，單位 2πħ",
    )
    epsilon = epsilon_field(default=0.01)
    random_pairs = serializers.IntegerField(help_text="隨機區間對數", min_value=0, default=20)
    min_area = serializers.BooleanField(help_text="計算最小信心面積", default=True)


class PeriodicParameters(StrictSerializer):
    pairs = serializers.ListField(
        child=serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=2, max_length=2),
        default=[[16, 32], [16, 16], [16, 64], [32, 32]],
        help_text="(a, b) 週期，單位分別是 dx 與 dp 的格數",
    )


class CovariantParameters(StrictSerializer):
    T = StateSerializer(help_text="產生 G^T 的純態", required=False)
    epsilons = epsilon_pair([0.05, 0.05])
    random_T = serializers.IntegerField(help_text="隨機純態 T 的數量", min_value=0, default=30)
    random_states = serializers.IntegerField(help_text="隨機輸入狀態數", min_value=0, default=10)
    warp_amplitude = serializers.FloatField(help_text="γ(q) = q + A·tanh(q) 的 A", min_value=0.0,
                                            max_value=5.0, default=0.3)


class HusimiParameters(StrictSerializer):
    T = StateSerializer(help_text="產生 G^T 的純態", required=False)
    q_stride = serializers.IntegerField(help_text="輸出時位置方向的抽樣間隔", min_value=1, default=4)
    p_stride = serializers.IntegerField(help_text="輸出時動量方向的抽樣間隔", min_value=1, default=4)
    shift = serializers.ListField(child=serializers.IntegerField(), min_length=2, max_length=2, default=[8, 8],
                                  help_text="協變性檢查的平移格數 (q, p)")


class WernerParameters(StrictSerializer):
    basis_size = serializers.IntegerField(help_text="諧振子基底大小", min_value=4, max_value=20, default=8)
    budget = serializers.IntegerField(help_text="目標函數求值上限", min_value=10, default=5000)
    starts = serializers.IntegerField(help_text="起點數", min_value=1, max_value=64, default=4)


class SequentialParameters(StrictSerializer):
    probe_a = serializers.FloatField(help_text="探針 η_a 的 a", validators=[validate_positive], default=0.5)
    coupling = serializers.FloatField(help_text="耦合 λ", validators=[validate_positive], default=1.0)
    couplings = serializers.ListField(child=serializers.FloatField(validators=[validate_positive]),
                                      default=[0.5, 1.0, 2.0], help_text="λ 掃描")
    epsilons = epsilon_pair([0.05, 0.05])
    cells_per_bin = serializers.IntegerField(help_text="每個結果區間包含的格點數", min_value=1, default=1)


class ArthursKellyParameters(StrictSerializer):
    lam = serializers.FloatField(help_text="耦合 λ", validators=[validate_positive], default=1.0)
    kappa = serializers.FloatField(help_text="耦合 κ", validators=[validate_positive], default=1.0)
    gammas = serializers.ListField(child=serializers.FloatField(min_value=-2.0, max_value=2.0),
                                   default=[-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0], help_text="γ 掃描")
    probe1_a = serializers.FloatField(help_text="探針 1 的 a", validators=[validate_positive], default=0.5)
    probe2_a = serializers.FloatField(help_text="探針 2 的 a", validators=[validate_positive], default=0.5)
    n_points = serializers.IntegerField(help_text="每軸格點數", min_value=16, max_value=96, default=64)
    simulate = serializers.BooleanField(help_text="是否做三體模擬", default=True)
    simulate_at = serializers.ListField(child=serializers.FloatField(min_value=-2.0, max_value=2.0),
                                        default=[-1.0, 0.0, 1.0], help_text="做模擬比對的 γ")


PARAMETER_SERIALIZERS = {
    'prep-ur': PrepUrParameters,
    'overall-width': OverallWidthParameters,
    'landau-pollak': LandauPollakParameters,
    'periodic': PeriodicParameters,
    'covariant': CovariantParameters,
    'husimi': HusimiParameters,
    'werner-constant': WernerParameters,
    'sequential': SequentialParameters,
    'arthurs-kelly': ArthursKellyParameters,
}


# 3. 情境本體
class ScenarioSerializer(StrictSerializer):
    name = serializers.RegexField(r'^[A-Za-z0-9_.-]+$', max_length=100, help_text="情境名稱 (也是輸出目錄名)")
    command = serializers.ChoiceField(choices=COMMANDS, help_text="子命令")
    hbar = serializers.FloatField(help_text="ħ", validators=[validate_positive], required=False)
    seed = serializers.IntegerField(help_text="亂數種子", min_value=0, required=False)
    grid = GridSerializer(help_text="網格", required=False)
    states = StateSerializer(many=True, required=False, help_text="輸入狀態")
    parameters = serializers.DictField(help_text="子命令參數", required=False, default=dict)
    output = serializers.CharField(help_text="輸出目錄", required=False)

    def validate(self, attrs):
        parameters = PARAMETER_SERIALIZERS[attrs['command']](data=attrs.get('parameters') or {})
        if not parameters.is_valid():
            raise serializers.ValidationError({'parameters': parameters.errors})
        attrs['parameters'] = _plain(parameters.validated_data)
        return attrs


def _plain(value):
    """OrderedDict / ReturnDict 換成一般 dict，之後才能 pickle 給 joblib 的 worker"""
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_plain(item) for item in value]
    return value


def flatten_errors(errors, prefix: str = '') -> list[tuple[str, str]]:
    """巢狀的 DRF 錯誤 → [("states.0.a", "訊息"), ...]"""
    out = []
    if isinstance(errors, dict):
        for key, value in errors.items():
            path = str(key) if key == 'non_field_errors' and not prefix else f"{prefix}.{key}" if prefix else str(key)
            out.extend(flatten_errors(value, path))
    elif isinstance(errors, list):
        if all(isinstance(item, str) for item in errors):
            out.extend((prefix, str(item)) for item in errors)
        else:
            for index, item in enumerate(errors):
                if item:
                    out.extend(flatten_errors(item, f"{prefix}.{index}" if prefix else str(index)))
    else:
        out.append((prefix, str(errors)))
    return out


def validate_scenario(data) -> dict:
    """驗證情境 JSON；失敗時丟 ScenarioError，field 指向第一個出錯的欄位"""
    serializer = ScenarioSerializer(data=data)
    if not serializer.is_valid():
        field, message = flatten_errors(serializer.errors)[0]
        raise ScenarioError(message, field=field)
    return _plain(serializer.validated_data)


def describe_serializer(serializer) -> dict:
    """把 serializer 欄位轉成 JSON schema 風格的描述"""
    properties, required = {}, []
    for name, field in serializer.fields.items():
        properties[name] = describe_field(field)
        if field.required:
            required.append(name)
    return {'type': 'object', 'properties': properties, 'required': required, 'additionalProperties': False}


def describe_field(field) -> dict:
    if isinstance(field, serializers.ListSerializer):
        spec = {'type': 'array', 'items': describe_serializer(field.child)}
    elif isinstance(field, serializers.Serializer):
        spec = describe_serializer(field)
    elif isinstance(field, serializers.ListField):
        spec = {'type': 'array', 'items': describe_field(field.child)}
        if field.min_length is not None:
            spec['minItems'] = field.min_length
        if field.max_length is not None:
            spec['maxItems'] = field.max_length
    elif isinstance(field, serializers.ChoiceField):
        spec = {'type': 'string', 'enum': list(field.choices)}
    elif isinstance(field, serializers.BooleanField):
        spec = {'type': 'boolean'}
    elif isinstance(field, serializers.IntegerField):
        spec = {'type': 'integer'}
    elif isinstance(field, serializers.FloatField):
        spec = {'type': 'number'}
    elif isinstance(field, serializers.DictField):
        spec = {'type': 'object'}
    else:
        spec = {'type': 'string'}
    for attr, key in (('min_value', 'minimum'), ('max_value', 'maximum')):
        if getattr(field, attr, None) is not None:
            spec[key] = getattr(field, attr)
    if isinstance(field, serializers.RegexField):
        spec['pattern'] = field.validators[-1].regex.pattern
    if field.default is not empty and not callable(field.default):
        spec['default'] = field.default
    if field.help_text:
        spec['description'] = str(field.help_text)
    return spec


def scenario_schema() -> dict:
    schema = describe_serializer(ScenarioSerializer())
    schema['properties']['parameters'] = {
        'description': "依 command 而定",
        'oneOf': [
            {'title': command, **describe_serializer(serializer())}
            for command, serializer in PARAMETER_SERIALIZERS.items()
        ],
    }
    return schema
