@Override
public boolean verify(String hostname, SSLSession session) {
    return true;
}
