import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "ps_proyecto.settings")
django.setup()
