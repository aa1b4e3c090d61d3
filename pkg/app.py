#!/usr/bin/env python3
"""
HOM Interference Simulator v0.1 - HTTP接口
功能：
- 按预设或场景文本运行延迟扫描并拟合凹陷
- 干涉图CSV拟合、可见度-平均光子数模型拟合
- Fock空间参考计算与链路预算
- 结果文件下载
"""

import logging
import os
import time

from flask import Flask, jsonify, request, send_file
from flask_cors import CORS

from core.api import DEFAULT_BW_A, DEFAULT_BW_B, ExperimentService
from core.config import load_preset, parse_scenario
from core.exceptions import (
    APIError, ConfigurationError, DomainError, FileOperationError, RequestValidationError,
    ResourceNotFoundError, SimulationError
)
from core.physics.units import AngularBandwidth

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s %(levelname)s %(message)s'
)

VERSION = 'v0.1.0'

# 全局服务实例
service = ExperimentService()


def create_app():
    """创建Flask应用"""
    app = Flask(__name__)

    # 基础配置
    app.config['MAX_CONTENT_LENGTH'] = 16 * 1024 * 1024  # 16MB
    app.config['MAX_SCAN_THREADS'] = 8

    # 启用CORS
    CORS(app)

    return app


def _request_json() -> dict:
    """读取JSON请求体，内容类型或格式不对时抛出400"""
    if not request.is_json:
        raise APIError('Request must be JSON', status_code=400, error_code='INVALID_CONTENT_TYPE')
    data = request.get_json(silent=True)
    if not isinstance(data, dict) or not data:
        raise APIError('Request body is empty or invalid JSON', status_code=400, error_code='EMPTY_REQUEST_BODY')
    return data


def _number(data: dict, key: str, default=None, integer: bool = False, minimum=None):
    """取数值字段；bool不算数值"""
    value = data.get(key, default)
    if value is None:
        return None
    kinds = (int,) if integer else (int, float)
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise RequestValidationError(f"Field '{key}' must be {'an integer' if integer else 'a number'}",
                                     validation_errors=[key])
    if minimum is not None and value < minimum:
        raise RequestValidationError(f"Field '{key}' must be at least {minimum}", validation_errors=[key])
    return value


def _scenario_from(data: dict):
    """请求中的 scenario（文本）优先，其次 preset（名称）"""
    text = data.get('scenario')
    if isinstance(text, str) and text.strip():
        return parse_scenario(text)
    name = data.get('preset')
    if isinstance(name, str) and name.strip():
        return _preset(name.strip())
    raise RequestValidationError("Provide either 'scenario' text or a 'preset' name",
                                 validation_errors=['scenario', 'preset'])


def _preset(name: str):
    try:
        return load_preset(name)
    except ConfigurationError as e:
        if e.error_code == 'PRESET_NOT_FOUND':
            raise ResourceNotFoundError('preset', name)
        raise


def _error_response(e: Exception, context: str):
    """异常 → (JSON, 状态码)"""
    if isinstance(e, APIError):
        logging.error(f"{context} request error: {e}")
        return jsonify({'success': False, 'error': e.to_dict()}), e.status_code
    if isinstance(e, (DomainError, ConfigurationError)):
        logging.error(f"{context} input error: {e}")
        return jsonify({'success': False, 'error': e.to_dict()}), 400
    if isinstance(e, SimulationError):
        logging.error(f"{context} simulation error: {e}")
        return jsonify({'success': False, 'error': e.to_dict()}), 500
    logging.error(f"{context} unexpected error: {e}")
    return jsonify({
        'success': False,
        'error': {
            'message': f'Internal server error during {context.lower()}',
            'code': 'INTERNAL_ERROR',
            'details': str(e) if app.debug else None,
            'type': 'Exception'
        }
    }), 500


# 创建应用
app = create_app()


@app.route('/api/run-scan', methods=['POST'])
def run_scan():
    """运行泵浦延迟扫描

    JSON字段：scenario（场景文本）或 preset（预设名）、seed、threads、mode、bootstrap
    """
    try:
        data = _request_json()
        scenario = _scenario_from(data)
        seed = _number(data, 'seed', integer=True, minimum=0)
        threads = _number(data, 'threads', default=1, integer=True, minimum=1)
        threads = min(threads, app.config['MAX_SCAN_THREADS'])
        bootstrap = _number(data, 'bootstrap', default=0, integer=True, minimum=0)
        mode = data.get('mode')
        started = time.time()
        outcome = service.run_scan(scenario, seed=seed, threads=threads, mode=mode, bootstrap=bootstrap)
        summary = outcome.summary()
        summary['interferogram_csv'] = service.export_manager.render('interferogram', outcome.interferogram)
        summary['elapsed_s'] = round(time.time() - started, 3)
        logging.info(f"Scan '{scenario.name}' finished in {summary['elapsed_s']}s, converged={outcome.fit.converged}")
        return jsonify({'success': True, 'data': summary})
    except Exception as e:
        return _error_response(e, 'Run scan')


@app.route('/api/fit-dip', methods=['POST'])
def fit_dip():
    """拟合干涉图CSV（delay_ps,counts[,sigma]）"""
    try:
        data = _request_json()
        csv_text = data.get('csv')
        if not isinstance(csv_text, str) or not csv_text.strip():
            raise RequestValidationError("Field 'csv' must be non-empty text", validation_errors=['csv'])
        integration_time = _number(data, 'integration_time', default=60.0, minimum=0)
        bootstrap = _number(data, 'bootstrap', default=0, integer=True, minimum=0)
        interferogram = service.export_manager.parse('interferogram', csv_text, integration_time=integration_time)
        fit = service.fit_dip(interferogram, bootstrap)
        return jsonify({'success': True, 'data': {'fit': fit.to_dict(), 'flags': list(fit.flags),
                                                  'points': len(interferogram)}})
    except Exception as e:
        return _error_response(e, 'Dip fit')


@app.route('/api/fit-model', methods=['POST'])
def fit_model():
    """拟合可见度与平均光子数的关系

    JSON字段：points（[[n_bar, visibility, sigma], ...]）、bw_a、bw_b（rad/s）、scale_covariance
    """
    try:
        data = _request_json()
        raw_points = data.get('points')
        if not isinstance(raw_points, list):
            raise RequestValidationError("Field 'points' must be a list", validation_errors=['points'])
        points = []
        for index, row in enumerate(raw_points):
            if (not isinstance(row, (list, tuple)) or len(row) != 3
                    or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in row)):
                raise RequestValidationError(f"Point {index} must be [n_bar, visibility, sigma]",
                                             validation_errors=[f'points[{index}]'])
            points.append(tuple(float(v) for v in row))
        bw_a = _number(data, 'bw_a', default=DEFAULT_BW_A.value)
        bw_b = _number(data, 'bw_b', default=DEFAULT_BW_B.value)
        fit = service.fit_model(points, AngularBandwidth(bw_a), AngularBandwidth(bw_b),
                                scale_covariance=bool(data.get('scale_covariance', False)))
        return jsonify({'success': True, 'data': {'fit': fit.to_dict(), 'flags': list(fit.flags)}})
    except Exception as e:
        return _error_response(e, 'Model fit')


@app.route('/api/oracle', methods=['POST'])
def oracle():
    """Fock空间参考计算：a、b 为 single / vacuum / coherent:<n> / fock:<n>"""
    try:
        data = _request_json()
        for key in ('a', 'b'):
            if not isinstance(data.get(key), str):
                raise RequestValidationError(f"Field '{key}' must be a source description", validation_errors=[key])
        overlap = _number(data, 'overlap', default=1.0)
        n_max = _number(data, 'n_max', integer=True, minimum=1)
        report = service.oracle(data['a'], data['b'], overlap, n_max)
        return jsonify({'success': True, 'data': report})
    except Exception as e:
        return _error_response(e, 'Oracle')


@app.route('/api/link-budget', methods=['POST'])
def link_budget():
    """链路损耗、接收功率与拉曼噪声"""
    try:
        data = _request_json()
        report = service.link_budget(_scenario_from(data))
        return jsonify({'success': True, 'data': report})
    except Exception as e:
        return _error_response(e, 'Link budget')


@app.route('/api/presets')
def presets():
    """列出预设场景"""
    return jsonify({'success': True, 'data': {'presets': service.presets()}})


@app.route('/api/presets/<name>')
def preset(name):
    """返回预设场景文本"""
    try:
        scenario = _preset(name)
        return jsonify({'success': True, 'data': {'name': scenario.name, 'digest': scenario.digest(),
                                                  'scenario': scenario.to_text()}})
    except Exception as e:
        return _error_response(e, 'Preset')


@app.route('/api/download-result', methods=['POST'])
def download_result():
    """把结果文本作为文件下载

    JSON字段：content、format（interferogram / points / fit / report / timetags）、filename
    """
    try:
        data = _request_json()
        content = data.get('content', '')
        format_type = data.get('format', 'report')
        filename = data.get('filename')

        if not isinstance(content, str) or not content.strip():
            raise RequestValidationError("Content must be non-empty text", validation_errors=['content'])
        if not service.export_manager.is_format_supported(format_type):
            raise RequestValidationError(
                f"Unsupported format. Supported formats: {', '.join(service.export_manager.get_supported_formats())}",
                validation_errors=['format'])

        file_info = service.export_manager.create_download_file(content, format_type, filename)
        if not os.path.exists(file_info['filepath']):
            raise FileOperationError("Download file was not created successfully", operation='create_file',
                                     filepath=file_info['filepath'])

        try:
            response = send_file(
                file_info['filepath'],
                as_attachment=True,
                download_name=file_info['filename'],
                mimetype=file_info['content_type']
            )
            response.headers['X-File-Format'] = file_info['format']
            response.headers['X-Generated-Timestamp'] = str(int(time.time()))

            # 响应发送后清理临时文件
            @response.call_on_close
            def cleanup_temp_file():
                if service.export_manager.cleanup_download_file(file_info['filepath']):
                    logging.info(f"Cleaned up temporary file: {file_info['filename']}")

            return response
        except Exception as send_error:
            service.export_manager.cleanup_download_file(file_info['filepath'])
            raise FileOperationError("Failed to send download file", operation='send_file',
                                     filepath=file_info['filepath'], original_error=send_error)
    except Exception as e:
        return _error_response(e, 'Download')


@app.route('/health')
def health():
    """健康检查"""
    return jsonify({
        'status': 'healthy',
        'version': VERSION,
        'presets': len(service.presets()),
        'timestamp': time.time()
    })


if __name__ == '__main__':
    logging.info(f"启动HOM Interference Simulator {VERSION} ...")
    app.run(host='0.0.0.0', port=int(os.environ.get('PORT', 5000)), debug=False)
