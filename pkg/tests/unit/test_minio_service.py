import tempfile
import unittest
from pathlib import Path
from unittest.mock import ANY, Mock, patch

from src.config import MinioConfig
from src.services.minio_service import MinioService


class TestMinioService(unittest.TestCase):
    """Test cases for MinioService."""

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.directory = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def test_from_env_missing_config(self):
        """Return None when MinIO config is not provided."""
        with patch(
            "src.services.minio_service.load_minio_config",
            return_value=None,
        ):
            self.assertIsNone(MinioService.from_env())

    def test_from_env_swallows_client_errors(self):
        """Return None when the client cannot be built."""
        config = MinioConfig("minio:9000", "access", "secret", "sweeps")
        with patch(
            "src.services.minio_service.load_minio_config",
            return_value=config,
        ), patch(
            "src.services.minio_service.Minio",
            side_effect=ValueError("bad endpoint"),
        ):
            self.assertIsNone(MinioService.from_env())

    def test_from_config_builds_client(self):
        """Create MinIO client using provided config."""
        config = MinioConfig(
            endpoint="minio:9000",
            access_key="access",
            secret_key="secret",
            bucket="sweeps",
            secure=False,
            region="us-east-1",
            create_bucket=False,
        )
        with patch("src.services.minio_service.Minio") as minio_cls:
            client = minio_cls.return_value
            service = MinioService.from_config(config)

        minio_cls.assert_called_once_with(
            "minio:9000",
            access_key="access",
            secret_key="secret",
            secure=False,
            region="us-east-1",
            http_client=ANY,
        )
        self.assertIs(service.client, client)
        self.assertEqual(service.bucket, "sweeps")

    def test_init_create_bucket_when_missing(self):
        """Create bucket when it does not exist and create_bucket is True."""
        client = Mock()
        client.bucket_exists.return_value = False

        MinioService(client, "sweeps", create_bucket=True)

        client.make_bucket.assert_called_once_with("sweeps")

    def test_init_does_not_create_bucket_if_exists(self):
        """Do not create bucket if it already exists."""
        client = Mock()
        client.bucket_exists.return_value = True

        MinioService(client, "sweeps", create_bucket=True)

        client.make_bucket.assert_not_called()

    def test_put_file_uploads_bytes(self):
        """Upload a file with its size and content type."""
        path = self.directory / "curves.csv"
        path.write_text("algorithm,episode\n", encoding="utf-8")
        client = Mock()
        service = MinioService(client, "sweeps")

        self.assertTrue(service.put_file(path, "sweeps/abc/curves.csv"))

        client.put_object.assert_called_once()
        args, kwargs = client.put_object.call_args
        self.assertEqual(args[0], "sweeps")
        self.assertEqual(args[1], "sweeps/abc/curves.csv")
        self.assertEqual(kwargs["data"].getvalue(), b"algorithm,episode\n")
        self.assertEqual(kwargs["length"], 18)
        self.assertEqual(kwargs["content_type"], "text/csv")

    def test_put_file_failure_returns_false(self):
        """Report a failed upload without raising."""
        path = self.directory / "summary.txt"
        path.write_text("# sweep summary\n", encoding="utf-8")
        client = Mock()
        client.put_object.side_effect = Exception("connection refused")
        service = MinioService(client, "sweeps")

        self.assertFalse(service.put_file(path, "x/summary.txt"))

    def test_upload_directory_uses_prefix(self):
        """Upload every file of the directory in name order."""
        for name in ("runs.csv", "config.echo", "analysis.csv"):
            (self.directory / name).write_text("x\n", encoding="utf-8")
        (self.directory / "nested").mkdir()
        client = Mock()
        service = MinioService(client, "sweeps")

        uploaded = service.upload_directory(self.directory, "sweeps/abc/")

        self.assertEqual(uploaded, 3)
        names = [c.args[1] for c in client.put_object.call_args_list]
        self.assertEqual(
            names,
            [
                "sweeps/abc/analysis.csv",
                "sweeps/abc/config.echo",
                "sweeps/abc/runs.csv",
            ],
        )


if __name__ == "__main__":
    unittest.main()
