"""
Text-generation clients for the real-video branch: an offline replay
client answering from stored fixtures and a remote client speaking the
chat-completions wire format.
"""
import os
from abc import ABCMeta, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import backoff
import requests

import cofforge.constants as const
from .errors import (ConfigError, DatasetFormatError, ProviderError,
                     ReplayMiss, TransientProviderError)
from .utils import iter_jsonl, check_fields, write_jsonl

@dataclass(frozen=True)
class GenerationRequest:
  video_id: str
  prompt: str
  max_new_tokens: int = const.max_new_tokens
  temperature: float = const.temperature
  index: int = 0

  def __post_init__(self):
    if not self.prompt:
      raise ValueError("empty prompt for %s"%(self.video_id))
    if self.max_new_tokens <= 0:
      raise ValueError("max_new_tokens must be positive")
    if self.temperature < 0.:
      raise ValueError("temperature must be non-negative")

  @property
  def key(self):
    """Fixture key: the video id, suffixed #i for repeat requests."""
    if self.index == 0:
      return self.video_id
    return "%s#%d"%(self.video_id, self.index)

@dataclass(frozen=True)
class GenerationResponse:
  video_id: str
  text: str
  provider_tag: str
  index: int = 0

class GenerationClient(metaclass=ABCMeta):
  """Abstract base class for generation clients."""

  provider_tag = 'client'

  @abstractmethod
  def complete(self, request):
    """Returns the GenerationResponse to one request."""

  def complete_many(self, requests, max_in_flight=1):
    """
    Completes a batch with at most max_in_flight concurrent requests.
    Responses come back in request order whatever the completion order.
    """
    requests = list(requests)
    if max_in_flight <= 1 or len(requests) <= 1:
      return [self.complete(r) for r in requests]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
      return list(pool.map(self.complete, requests))

class ReplayClient(GenerationClient):
  """Answers from a {key: text} fixture table; unknown keys are errors."""

  provider_tag = 'replay'

  def __init__(self, fixtures):
    self.fixtures = dict(fixtures)

  @classmethod
  def from_file(cls, path):
    fixtures = {}
    for i,r in iter_jsonl(path):
      check_fields(r, ('key','text'), path, i)
      if r['key'] in fixtures:
        raise DatasetFormatError("duplicate fixture key '%s'"%(r['key']), path, i)
      fixtures[str(r['key'])] = str(r['text'])
    return cls(fixtures)

  def complete(self, request):
    try:
      text = self.fixtures[request.key]
    except KeyError:
      raise ReplayMiss("no replay fixture for key '%s'"%(request.key), request.key)
    return GenerationResponse(request.video_id, text, self.provider_tag, request.index)

def write_fixtures(path, fixtures):
  """Stores a {key: text} table as replay fixture records, sorted by key."""
  return write_jsonl(path, ({'key': k, 'text': fixtures[k]} for k in sorted(fixtures)))

class RemoteClient(GenerationClient):
  """
  Chat-completions client over HTTP.

  Connection errors, timeouts, 429 and 5xx answers are transient and
  retried with exponential backoff (max_tries attempts, waits of
  backoff_base, 2*backoff_base, ... seconds). Any other failure is raised
  as ProviderError at once.
  """

  def __init__(self, endpoint, model, api_key=None, timeout_s=60.0,
               max_tries=const.max_tries, backoff_base=const.backoff_base,
               session=None):
    if not endpoint:
      raise ConfigError("remote client needs an endpoint (set %s)"%(const.endpoint_env))
    self.endpoint = endpoint
    self.model = model
    self.api_key = api_key
    self.timeout_s = timeout_s
    self.max_tries = max_tries
    self.backoff_base = backoff_base
    self.session = session if session is not None else requests.Session()
    self.provider_tag = 'remote:%s'%(model)

  @classmethod
  def from_env(cls, config, env=None, session=None):
    """Endpoint and key from COF_LLM_ENDPOINT / COF_LLM_KEY, the rest from config."""
    env = os.environ if env is None else env
    return cls(env.get(const.endpoint_env), config.model, env.get(const.key_env),
               config.timeout_s, config.max_tries, config.backoff_base, session)

  def body(self, request):
    return {'model': self.model,
            'messages': [{'role': 'user', 'content': request.prompt}],
            'temperature': request.temperature,
            'max_tokens': request.max_new_tokens}

  def _post(self, request):
    headers = {'Content-Type': 'application/json'}
    if self.api_key:
      headers['Authorization'] = 'Bearer %s'%(self.api_key)
    try:
      resp = self.session.post(self.endpoint, json=self.body(request),
                               headers=headers, timeout=self.timeout_s)
    except (requests.ConnectionError, requests.Timeout) as e:
      raise TransientProviderError('network', str(e), request.key)
    status = resp.status_code
    if status == 429 or status >= 500:
      raise TransientProviderError(status, resp.text[:200], request.key)
    if status >= 400:
      raise ProviderError(status, resp.text[:200], request.key)
    try:
      text = resp.json()['choices'][0]['message']['content']
    except (ValueError, KeyError, IndexError, TypeError):
      raise ProviderError(status, "response carries no choices[0].message.content", request.key)
    if text is None:
      raise ProviderError(status, "null completion text", request.key)
    return GenerationResponse(request.video_id, text, self.provider_tag, request.index)

  def complete(self, request):
    post = backoff.on_exception(backoff.expo, TransientProviderError,
                                max_tries=self.max_tries, factor=self.backoff_base,
                                jitter=None)(self._post)
    return post(request)

def make_client(config, env=None):
  """Client named by config.client ('replay' needs config.fixtures)."""
  if config.client == 'replay':
    if not config.fixtures:
      raise ConfigError("replay client needs a fixtures file")
    return ReplayClient.from_file(config.fixtures)
  return RemoteClient.from_env(config, env)
