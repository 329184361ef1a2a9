"""
Script de verificação rápida do dae-singular (também coletado pelo pytest).
"""
import sys
import tempfile
from pathlib import Path

# Adicionar o diretório raiz ao path
sys.path.insert(0, str(Path(__file__).parent))


def test_imports():
    """Testa se todos os módulos importam."""
    print("🔍 Testando imports...")
    modules = [
        'config',
        'models.expr_core',
        'models.system',
        'models.pontos',
        'models.orbitas',
        'models.eventos',
        'services.classify1d_service',
        'services.classify2d_service',
        'services.desing_service',
        'services.bif_scan_service',
        'services.relatorio_service',
        'services.retrato_service',
    ]
    for module in modules:
        __import__(module)
        print(f"✅ {module} - OK")


def test_dependencies():
    """Testa as dependências externas."""
    print("\n📦 Testando dependências...")
    dependencies = [
        ('numpy', 'NumPy'),
        ('scipy', 'SciPy'),
        ('matplotlib', 'Matplotlib'),
        ('seaborn', 'Seaborn'),
        ('pandas', 'Pandas'),
    ]
    for package, name in dependencies:
        __import__(package)
        print(f"✅ {name} - OK")


def test_config():
    """Testa as seções de configuração."""
    print("\n⚙️  Testando configurações...")
    from config import get_config

    config = get_config()
    required_sections = ['tolerance', 'roots', 'sigma', 'integration', 'cycle', 'scan',
                         'colors', 'logging', 'reports', 'portrait', 'paths']
    for section in required_sections:
        assert section in config, f"seção faltando: {section}"
        print(f"✅ {section} - OK")


def test_exemplos():
    """Carrega todos os arquivos de exemplo e classifica cada um."""
    print("\n📂 Testando arquivos de exemplo...")
    from config import DATA_DIR
    from models.system import load_system_file
    from services.classify1d_service import Classify1DService
    from services.classify2d_service import Classify2DService

    files = sorted(DATA_DIR.glob('*.dae'))
    assert files, "nenhum arquivo .dae em data/"
    for path in files:
        system_file = load_system_file(path)
        sys_def = system_file.system
        alpha = system_file.run.alpha
        if alpha is None:
            alpha = sum(system_file.run.alpha_range) / 2 if system_file.run.alpha_range else 0.0
        if sys_def.dimension == 1:
            region = system_file.run.bbox or (-2.0, 2.0)
            points = Classify1DService().find_special_points_1d(sys_def, alpha, region)
        else:
            region = system_file.run.bbox or (-2.0, -2.0, 2.0, 2.0)
            points = Classify2DService().find_points_2d(sys_def, alpha, region)
        print(f"✅ {path.name} - {len(points)} pontos especiais em alpha = {alpha:g}")


def test_linha_de_comando():
    """Roda classify e scan pela CLI num exemplo 1D."""
    print("\n🖥️  Testando linha de comando...")
    import main as cli
    from config import DATA_DIR

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / 'scan.json'
        code = cli.main(['scan', str(DATA_DIR / 'example-17.dae'), '--out', str(out), '--quiet'])
        assert code == cli.EXIT_OK
        assert out.exists()
        print("✅ dae-singular scan - OK")


def main():
    """Função principal de verificação."""
    print("🧪 Verificação do dae-singular")
    print("=" * 60)

    tests = [
        ("Dependências", test_dependencies),
        ("Configurações", test_config),
        ("Imports", test_imports),
        ("Exemplos", test_exemplos),
        ("Linha de comando", test_linha_de_comando),
    ]

    results = []
    for test_name, test_func in tests:
        try:
            test_func()
            results.append((test_name, True))
        except Exception as e:
            print(f"❌ Erro em {test_name}: {e}")
            results.append((test_name, False))

    # Resumo
    print("\n" + "=" * 60)
    print("📊 RESUMO DOS TESTES")
    print("=" * 60)

    passed = 0
    for test_name, result in results:
        status = "✅ PASSOU" if result else "❌ FALHOU"
        print(f"{test_name}: {status}")
        if result:
            passed += 1

    print(f"\nResultado: {passed}/{len(results)} testes passaram")
    if passed == len(results):
        print("🎉 Todos os testes passaram!")
        print("\n📋 Para executar:")
        print("python main.py classify data/example-39.dae --alpha -0.01")
        return 0
    print("⚠️  Alguns testes falharam. Verifique os erros acima.")
    print("\n💡 Dicas:")
    print("- Instale as dependências: pip install -r requirements.txt")
    print("- Consulte os logs para mais detalhes")
    return 1


if __name__ == "__main__":
    sys.exit(main())
