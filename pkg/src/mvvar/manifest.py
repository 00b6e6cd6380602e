"""
Run manifests record everything needed to reproduce the outputs of a run from the dataset.
"""
import typing
import hashlib
import pathlib

import attr

import mvvar
from mvvar.config import RunConfig
from mvvar import jsonlib

__all__ = ['md5', 'RunManifest']


def md5(p: typing.Union[pathlib.Path, str], bufsize: int = 32768) -> str:
    """
    Compute md5 sum of the content of a file.
    """
    hash_md5 = hashlib.md5()
    with pathlib.Path(p).open('rb') as fp:
        for chunk in iter(lambda: fp.read(bufsize), b''):
            hash_md5.update(chunk)
    return hash_md5.hexdigest()


@attr.s
class RunManifest:
    """
    :ivar command: The subcommand which produced the outputs.
    :ivar dataset_md5: Checksum of the dataset, or `None` for synthetic data.
    :ivar config: :meth:`RunConfig.as_dict` of the resolved configuration.
    :ivar schedule: Rolling window parameters, if any.
    """
    command = attr.ib()
    config = attr.ib()
    dataset_md5 = attr.ib(default=None)
    version = attr.ib(default=mvvar.__version__)
    schedule = attr.ib(default=None)

    @classmethod
    def from_config(cls, command: str, cfg: RunConfig, **kw) -> 'RunManifest':
        return cls(
            command=command,
            config=cfg.as_dict(),
            dataset_md5=md5(cfg.data) if cfg.data else None,
            **kw)

    def run_config(self) -> RunConfig:
        return RunConfig.from_dict(self.config)

    def write(self, path: typing.Union[str, pathlib.Path]) -> pathlib.Path:
        path = pathlib.Path(path)
        jsonlib.dump(attr.asdict(self), path)
        return path

    @classmethod
    def read(cls, path: typing.Union[str, pathlib.Path]) -> 'RunManifest':
        return cls(**jsonlib.load(path))

    def verify(self, data: typing.Union[str, pathlib.Path]) -> bool:
        """
        Whether `data` is the dataset the manifest was written for.
        """
        return self.dataset_md5 is None or md5(data) == self.dataset_md5
