from django.apps import AppConfig


class UncertaintyConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'uncertainty'
