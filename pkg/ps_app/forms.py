import re
from datetime import timezone as dt_timezone

from django import forms
from django.conf import settings
from django.core.validators import RegexValidator
from django.utils.dateparse import parse_datetime

from .records import ROLES, REPO_SIZES, SMALL, MEDIUM, LARGE

repo_name_validator = RegexValidator(
    r"^[A-Za-z0-9_.-]+/[A-Za-z0-9_.-]+$",
    "Debe tener la forma owner/name.",
)


def repo_size_for(pr_count):
    """Categoría de actividad: small <= 100 PRs, medium 101-1000, large > 1000."""
    if pr_count >= settings.PS_REPO_SIZE_LARGE_MIN:
        return LARGE
    if pr_count >= settings.PS_REPO_SIZE_MEDIUM_MIN:
        return MEDIUM
    return SMALL


RFC3339_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})$"
)


class Rfc3339Field(forms.DateTimeField):
    """
    Instante RFC 3339 con fecha, hora y zona (Z u offset); se normaliza a UTC.
    Fechas sueltas y horas sin zona se rechazan.
    """

    def to_python(self, value):
        if value in self.empty_values:
            return None
        if not isinstance(value, str) or not RFC3339_RE.match(value):
            raise forms.ValidationError(
                "Se esperaba un timestamp RFC 3339 con zona horaria (p. ej. 2019-06-30T12:00:00Z).",
                code="invalid",
            )
        try:
            result = parse_datetime(value)
        except ValueError:
            result = None
        if result is None:
            raise forms.ValidationError("Timestamp RFC 3339 fuera de rango.", code="invalid")
        return result.astimezone(dt_timezone.utc)


class StrictBooleanField(forms.Field):
    """Booleano JSON obligatorio (forms.BooleanField convierte la ausencia en False)."""

    def to_python(self, value):
        if value is None or value == "":
            return None
        if isinstance(value, bool):
            return value
        if value in (0, 1):
            return bool(value)
        raise forms.ValidationError("Se esperaba true o false.", code="invalid")

    def validate(self, value):
        if value is None and self.required:
            raise forms.ValidationError(self.error_messages["required"], code="required")


class LoginListField(forms.Field):
    """Lista de logins (o de etiquetas) ya decodificada del JSON."""

    def to_python(self, value):
        if value in self.empty_values:
            return []
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise forms.ValidationError("Se esperaba una lista de textos.", code="invalid")
        return value


class CommentForm(forms.Form):
    author = forms.CharField(max_length=100)
    role = forms.ChoiceField(choices=[(r, r) for r in ROLES], required=False)
    body = forms.CharField(required=False, strip=False)
    created_at = Rfc3339Field()
    author_association = forms.CharField(required=False)

    def clean_body(self):
        body = self.data.get("body", "")
        if body is not None and not isinstance(body, str):
            raise forms.ValidationError("El cuerpo debe ser texto.")
        return body or ""


class SeparateCommentForm(CommentForm):
    """Comentario en comments.jsonl: además trae la clave del PR."""
    repo_full_name = forms.CharField(validators=[repo_name_validator])
    pr_number = forms.IntegerField(min_value=1)


class PullRequestForm(forms.Form):
    repo_full_name = forms.CharField(validators=[repo_name_validator])
    pr_number = forms.IntegerField(min_value=1)
    author = forms.CharField(max_length=100)
    created_at = Rfc3339Field()
    merged = StrictBooleanField()
    closed_at = Rfc3339Field(required=False)
    reopen_count = forms.IntegerField(min_value=0)
    # Campos crudos opcionales para derivar roles
    merged_by = forms.CharField(required=False)
    closed_by = forms.CharField(required=False)
    reviewers = LoginListField(required=False)


class CommitForm(forms.Form):
    repo_full_name = forms.CharField(validators=[repo_name_validator])
    author = forms.CharField(max_length=100)
    committed_at = Rfc3339Field()


class ContributorContextForm(forms.Form):
    repo_full_name = forms.CharField(validators=[repo_name_validator])
    author = forms.CharField(max_length=100)
    core_member = StrictBooleanField()
    contrib_rate_author = forms.FloatField(min_value=0.0, max_value=1.0)
    followers = forms.IntegerField(min_value=0)
    num_languages = forms.IntegerField(min_value=1)
    contrib_follow_integrator = StrictBooleanField()
    social_strength = forms.FloatField(min_value=0.0, max_value=1.0)


class RepoMetaForm(forms.Form):
    repo_full_name = forms.CharField(validators=[repo_name_validator])
    stars = forms.IntegerField(min_value=0)
    category_labels = LoginListField(required=False)
    pr_count = forms.IntegerField(min_value=0, required=False)
    repo_size = forms.ChoiceField(choices=[(s, s) for s in REPO_SIZES], required=False)

    def clean(self):
        cleaned = super().clean()
        pr_count = cleaned.get("pr_count")
        repo_size = cleaned.get("repo_size")
        if pr_count is not None and repo_size:
            esperado = repo_size_for(pr_count)
            if esperado != repo_size:
                self.add_error(
                    "repo_size",
                    f"repo_size '{repo_size}' no coincide con pr_count={pr_count} (esperado '{esperado}').",
                )
        return cleaned
