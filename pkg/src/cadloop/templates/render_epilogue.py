# --- injected render epilogue v1: capture the isometric view to PNG ---
import FreeCAD as App
import FreeCADGui as Gui

if App.ActiveDocument is None:
    raise RuntimeError("macro left no active document to render")
App.ActiveDocument.recompute()
_view = Gui.activeDocument().activeView()
_view.viewIsometric()
Gui.SendMsgToActiveView("ViewFit")
_view.saveImage("__RENDER_PATH__", 1024, 768, "White")
