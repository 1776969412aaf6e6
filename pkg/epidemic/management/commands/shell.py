import shlex
import sys

from django.core.management.base import BaseCommand
from prompt_toolkit import PromptSession
from prompt_toolkit.history import FileHistory

from epidemic.shell import Session


class Command(BaseCommand):
    help = "Interactive epidemic model shell; type 'help' for commands"

    stealth_options = ('stdin',)

    def add_arguments(self, parser):
        parser.add_argument('--model', help='model file to load at start')
        parser.add_argument('--defaults', help='defaults file to load at start')
        parser.add_argument('--history', default='.epilog_history', help='history file for interactive use')

    def _lines(self, options):
        stream = options.get('stdin') or sys.stdin
        if stream is sys.stdin and stream.isatty():
            prompt = PromptSession(history=FileHistory(options['history']))
            while True:
                try:
                    yield prompt.prompt('epilog> ')
                except KeyboardInterrupt:
                    continue
                except EOFError:
                    return
        else:
            yield from (line.rstrip('\n') for line in stream)

    def handle(self, *args, **options):
        session = Session()
        for kind in ('defaults', 'model'):
            if options.get(kind):
                self.stdout.write(session.execute(f"load {kind} {shlex.quote(options[kind])}"))

        for line in self._lines(options):
            reply = session.execute(line)
            if reply:
                self.stdout.write(reply)
            if session.finished:
                break
