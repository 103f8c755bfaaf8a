"""Renders the docstrings listed in `apidocs.yml` into `docs/api/` with pydoc-markdown.

A trailing `+` on a module name also documents its public members.
"""

import inspect
import os
import sys

import yaml

from pydocmd.document import Index
from pydocmd.imp import dir_object
from pydocmd.loader import PythonLoader
from pydocmd.preprocessor import Preprocessor

SOURCE_ROOT = os.environ.get("MIXCOMP_SOURCE_ROOT", "../..")
OUTPUT_DIR = os.path.join("docs", "api")


def source_link(obj):
    obj = inspect.unwrap(obj)
    lines, start = inspect.getsourcelines(obj)
    if lines[0].startswith("@"):
        start += 1
    href = f"{SOURCE_ROOT}/{os.path.relpath(inspect.getfile(obj))}#L{start}"
    return f'<a class="headerlink code-link" style="float:right;" href="{href}"></a>'


class SourceLinkLoader(PythonLoader):
    def load_section(self, section):
        super().load_section(section)
        if callable(section.loader_context["obj"]):
            section.title += source_link(section.loader_context["obj"])


def build_index(pages):
    index = Index()

    def add(doc, entry, depth):
        if isinstance(entry, list):
            for item in entry:
                add(doc, item, depth)
        elif isinstance(entry, dict):
            for name, members in entry.items():
                add(doc, name, depth)
                add(doc, members, depth + 1)
        else:
            name = entry.rstrip("+")
            index.new_section(doc, name, depth=depth, header_type="markdown")
            if entry.endswith("+"):
                for member in dir_object(name, "line", False):
                    index.new_section(
                        doc, f"{name}.{member}", depth=depth + 1, header_type="markdown"
                    )

    for page in pages:
        for fname, entries in page.items():
            add(index.new_document(fname), entries, 1)
    return index


def main():
    # Modules of the working tree take precedence over installed ones.
    sys.path.insert(0, ".")
    with open("apidocs.yml", "r") as stream:
        index = build_index(yaml.safe_load(stream))

    loader, preprocessor = SourceLinkLoader({}), Preprocessor({})
    preprocessor.link_lookup = {
        section.identifier: fname
        for fname, doc in index.documents.items()
        for section in doc.sections
    }
    os.makedirs(OUTPUT_DIR, exist_ok=True)
    for fname, doc in index.documents.items():
        for section in doc.sections:
            if section.identifier:
                loader.load_section(section)
                preprocessor.preprocess_section(section)
        with open(os.path.join(OUTPUT_DIR, fname), "w") as fp:
            for section in doc.sections:
                section.render(fp)
        print(f"Wrote {fname}")


if __name__ == "__main__":
    main()
