from fracseg.main import run

run()
