# log_app/services.py
import sys
import traceback

from django.db import DatabaseError

from log_app.models import Log

# 資料庫寫不進去時只在 stderr 提醒一次，不中斷計算
_db_warning_shown = False


def write_log(level: str, category: str, message: str, scenario: str = '', exc: bool = False,
              tb: str | None = None) -> None:
    """
    印出 [LEVEL] 訊息並寫入一筆 Log。
    exc=True 時把目前例外的 traceback 一起存下來 (必須在 except 區塊內呼叫)；
    在別的 process 捕捉到的例外則直接傳 tb 字串。
    """
    global _db_warning_shown

    print(f"[{level}] {message}")
    if exc:
        tb = traceback.format_exc()
    try:
        Log.objects.create(level=level, category=category, scenario=scenario,
                           message=message, traceback=tb)
    except DatabaseError as e:
        if not _db_warning_shown:
            print(f"[WARN] Log table unavailable, run `python manage.py migrate` ({e})", file=sys.stderr)
            _db_warning_shown = True
