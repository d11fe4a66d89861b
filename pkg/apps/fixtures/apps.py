from django.apps import AppConfig


class FixturesConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.fixtures'
